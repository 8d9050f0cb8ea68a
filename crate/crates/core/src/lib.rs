//! Link-level simulator for OTFS with code index modulation (OTFS-CIM) in a
//! SIMO setup over high-mobility Rayleigh channels, with plain OTFS and
//! OTFS with spatial modulation as references.
//!
//! The transmit chain is [`mapping`] → [`spreading`] → [`transforms`] →
//! [`channel`]; [`link`] runs whole frames, [`detector`] recovers code
//! indices and symbols, [`benchmarks`] holds the reference systems,
//! [`analysis`] the closed-form metrics and [`harness`] the Monte Carlo
//! engine.
//!
//! ```
//! use otfs_cim::{spectral_efficiency, FrameConfig, System};
//!
//! let cfg = FrameConfig::default();
//! cfg.validate().unwrap();
//! assert_eq!(spectral_efficiency(System::OtfsCim, &cfg).unwrap(), 24);
//! ```

pub mod analysis;
pub mod benchmarks;
pub mod channel;
pub mod config;
pub mod detector;
pub mod error;
pub mod harness;
pub mod link;
pub mod mapping;
pub mod spreading;
pub mod transforms;

pub use analysis::{energy_saving, throughput, MetricPoint, MetricRow};
pub use benchmarks::{otfs_sm_transceive, otfs_transceive, OtfsLink, SmCell, SmLink};
pub use channel::{apply_channel, sample_paths, ChannelRealization, PathSet};
pub use config::{bits_per_frame, spectral_efficiency, FrameConfig, System, ValidationPolicy};
pub use detector::{detect_frame, joint_ml_oracle, CellDecision};
pub use error::{Error, Result};
pub use harness::{run_point, run_sweep, BerRecord, RunOptions, SweepSpec};
pub use link::{CimLink, FrameLink};
pub use mapping::{build_constellation, demap_frame, map_bits, CimCell, DdFrame, QamConstellation};
pub use spreading::{generate_wh, SpreadingCodeSet};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/getting-started.md")]
    mod getting_started {}
    #[doc = include_str!("../../../book/src/mapping-and-spreading.md")]
    mod mapping_and_spreading {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/benchmarks-and-metrics.md")]
    mod benchmarks_and_metrics {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
}
