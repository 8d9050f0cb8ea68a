//! End-to-end frame simulation.
//!
//! Each delay-Doppler cell is observed in isolation: for every chip of the
//! cell a grid holding only that chip at the cell's position goes through
//! ISFFT, Heisenberg, the channel with fresh noise, Wigner and SFFT on every
//! receive antenna. Stacking the antenna outputs column by column gives the
//! cell's (N_R·N·M) × L observation `Y_v = h_v·xᵀ + W`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{apply_channel, sample_paths, ChannelRealization};
use crate::config::FrameConfig;
use crate::detector::{detect_cell, CellDecision};
use crate::error::{DimensionError, Result};
use crate::mapping::{CimCell, CimMapper};
use crate::spreading::{cell_chips, SpreadingCodeSet};
use crate::transforms::OtfsOperators;

/// Pushes single-cell chip sequences through the OTFS chain.
#[derive(Debug, Clone)]
pub struct CellObserver {
    ops: OtfsOperators,
}

impl CellObserver {
    pub fn new(doppler_bins: usize, delay_bins: usize) -> Self {
        CellObserver {
            ops: OtfsOperators::new(doppler_bins, delay_bins),
        }
    }

    pub fn for_config(cfg: &FrameConfig) -> Self {
        Self::new(cfg.doppler_bins, cfg.delay_bins)
    }

    pub fn operators(&self) -> &OtfsOperators {
        &self.ops
    }

    /// Draws a channel for this grid.
    pub fn sample_channel<R: Rng + ?Sized>(
        &self,
        cfg: &FrameConfig,
        rng: &mut R,
    ) -> ChannelRealization {
        ChannelRealization::with_operators(sample_paths(cfg, rng), &self.ops)
    }

    /// Received delay-Doppler observation of `chips` sent on cell `cell`,
    /// one column per chip.
    pub fn observe<R: Rng + ?Sized>(
        &self,
        realization: &ChannelRealization,
        cell: usize,
        chips: &[Complex64],
        snr_db: f64,
        rng: &mut R,
    ) -> Result<DMatrix<Complex64>, DimensionError> {
        let nm = self.ops.grid_size();
        if cell >= nm {
            return Err(DimensionError::new("cell index", format!("< {nm}"), cell));
        }
        // a grid holding one chip at `cell` maps to that chip times column `cell`
        let pulse = self.ops.to_time().column(cell);
        let frames: Vec<DVector<Complex64>> = chips.iter().map(|&chip| pulse * chip).collect();
        let received = apply_channel(&frames, realization, snr_db, rng)?;
        let rows = realization.time_matrix.nrows();
        let mut out = DMatrix::zeros(rows, chips.len());
        for (col, y) in received.iter().enumerate() {
            for r in 0..rows / nm {
                let dd = self.ops.to_dd() * y.rows(r * nm, nm);
                out.view_mut((r * nm, col), (nm, 1)).copy_from(&dd);
            }
        }
        Ok(out)
    }
}

/// Independent random streams used for one frame.
#[derive(Debug, Clone)]
pub struct FrameRngs {
    pub payload: ChaCha8Rng,
    pub channel: ChaCha8Rng,
    pub noise: ChaCha8Rng,
}

/// Bit count and bit errors of one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameOutcome {
    pub bits: u64,
    pub errors: u64,
}

/// A transmission scheme that can simulate whole frames.
pub trait FrameLink: Send + Sync {
    fn bits_per_frame(&self) -> usize;

    /// Draws a payload and a channel, transmits, detects and counts errors.
    fn simulate_frame(&self, rngs: &mut FrameRngs, snr_db: f64) -> Result<FrameOutcome>;
}

pub(crate) fn random_payload<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..2u8)).collect()
}

pub(crate) fn count_errors(sent: &[u8], received: &[u8]) -> u64 {
    sent.iter().zip(received).filter(|(a, b)| a != b).count() as u64
}

/// OTFS-CIM transmitter and receiver for one configuration.
#[derive(Debug, Clone)]
pub struct CimLink {
    cfg: FrameConfig,
    mapper: CimMapper,
    codes: SpreadingCodeSet,
    observer: CellObserver,
}

impl CimLink {
    /// Expects a configuration that already passed validation.
    pub fn new(cfg: &FrameConfig) -> Result<Self> {
        Ok(CimLink {
            cfg: cfg.clone(),
            mapper: CimMapper::new(cfg)?,
            codes: SpreadingCodeSet::walsh_hadamard(cfg.code_length, cfg.num_codes)?,
            observer: CellObserver::for_config(cfg),
        })
    }

    pub fn config(&self) -> &FrameConfig {
        &self.cfg
    }

    pub fn mapper(&self) -> &CimMapper {
        &self.mapper
    }

    pub fn codes(&self) -> &SpreadingCodeSet {
        &self.codes
    }

    /// Observations of every cell of a mapped frame, in cell order.
    pub fn observe_frame<R: Rng + ?Sized>(
        &self,
        cells: &[CimCell],
        realization: &ChannelRealization,
        snr_db: f64,
        rng: &mut R,
    ) -> Result<Vec<DMatrix<Complex64>>> {
        cells
            .iter()
            .enumerate()
            .map(|(v, cell)| {
                let chips = cell_chips(cell, &self.codes);
                Ok(self.observer.observe(realization, v, &chips, snr_db, rng)?)
            })
            .collect()
    }

    /// Sends `payload` over `realization` and returns the detected bits.
    pub fn transceive<R: Rng + ?Sized>(
        &self,
        payload: &[u8],
        realization: &ChannelRealization,
        snr_db: f64,
        rng: &mut R,
    ) -> Result<Vec<u8>> {
        let frame = self.mapper.map(payload)?;
        let observations = self.observe_frame(&frame.cells, realization, snr_db, rng)?;
        let decisions = observations
            .iter()
            .enumerate()
            .map(|(v, y)| {
                detect_cell(
                    y,
                    &realization.column(v),
                    &self.codes,
                    self.mapper.constellation(),
                )
            })
            .collect::<Result<Vec<CellDecision>, _>>()?;
        let cells: Vec<CimCell> = decisions
            .iter()
            .map(|d| d.to_cell(self.mapper.constellation()))
            .collect();
        Ok(self.mapper.demap(&cells)?)
    }
}

impl FrameLink for CimLink {
    fn bits_per_frame(&self) -> usize {
        self.mapper.bits_per_frame()
    }

    fn simulate_frame(&self, rngs: &mut FrameRngs, snr_db: f64) -> Result<FrameOutcome> {
        let payload = random_payload(self.bits_per_frame(), &mut rngs.payload);
        let realization = self.observer.sample_channel(&self.cfg, &mut rngs.channel);
        let detected = self.transceive(&payload, &realization, snr_db, &mut rngs.noise)?;
        Ok(FrameOutcome {
            bits: payload.len() as u64,
            errors: count_errors(&payload, &detected),
        })
    }
}
