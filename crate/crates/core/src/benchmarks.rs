//! Reference systems: plain OTFS and OTFS with spatial modulation.
//!
//! Both place one QAM symbol per delay-Doppler cell and use the same
//! per-cell observation model as OTFS-CIM with a single chip. OTFS-SM
//! additionally selects one of N_T transmit antennas per cell; every
//! antenna sees its own path gains over a shared delay-Doppler geometry.
//! Detection is exhaustive maximum likelihood.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{sample_tx_path_sets, ChannelRealization};
use crate::config::FrameConfig;
use crate::detector::ml_label;
use crate::error::{DimensionError, MappingError, Result};
use crate::link::{count_errors, random_payload, CellObserver, FrameLink, FrameOutcome, FrameRngs};
use crate::mapping::{check_bits, push_uint, read_uint, QamConstellation};

/// One OTFS-SM cell: the active transmit antenna (1-based) and the
/// constellation label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmCell {
    pub antenna: usize,
    pub label: usize,
}

/// Label minimising `‖y − s·h‖²`, ties to the lowest label.
pub fn ml_detect_symbol(
    observation: &DVector<Complex64>,
    channel: &DVector<Complex64>,
    constellation: &QamConstellation,
) -> usize {
    ml_label(
        channel.dotc(observation),
        channel.norm_squared(),
        constellation,
    )
    .0
}

/// Antenna and label minimising `‖y − s·h_t‖²` over all antennas `t`,
/// ties to the lowest antenna, then the lowest label.
pub fn ml_detect_sm(
    observation: &DVector<Complex64>,
    channels: &[DVector<Complex64>],
    constellation: &QamConstellation,
) -> SmCell {
    let mut best = (
        SmCell {
            antenna: 1,
            label: 0,
        },
        f64::INFINITY,
    );
    for (antenna, h) in channels.iter().enumerate() {
        let (label, d) = ml_label(h.dotc(observation), h.norm_squared(), constellation);
        if d < best.1 {
            best = (
                SmCell {
                    antenna: antenna + 1,
                    label,
                },
                d,
            );
        }
    }
    best.0
}

fn single_column(y: DMatrix<Complex64>) -> DVector<Complex64> {
    y.column(0).into_owned()
}

/// Plain OTFS with per-cell ML detection.
#[derive(Debug, Clone)]
pub struct OtfsLink {
    cfg: FrameConfig,
    constellation: QamConstellation,
    observer: CellObserver,
}

impl OtfsLink {
    pub fn new(cfg: &FrameConfig) -> Result<Self> {
        Ok(OtfsLink {
            cfg: cfg.clone(),
            constellation: QamConstellation::new(cfg.qam_order)?,
            observer: CellObserver::for_config(cfg),
        })
    }

    pub fn constellation(&self) -> &QamConstellation {
        &self.constellation
    }

    /// Sends `payload` over `realization` and returns the detected bits.
    pub fn transceive<R: Rng + ?Sized>(
        &self,
        payload: &[u8],
        realization: &ChannelRealization,
        snr_db: f64,
        rng: &mut R,
    ) -> Result<Vec<u8>> {
        check_bits(payload, self.bits_per_frame())?;
        let width = self.constellation.bits_per_symbol();
        let mut out = Vec::with_capacity(payload.len());
        for (v, block) in payload.chunks(width).enumerate() {
            let s = self.constellation.point(read_uint(block));
            let y = single_column(self.observer.observe(realization, v, &[s], snr_db, rng)?);
            let label = ml_detect_symbol(&y, &realization.column(v), &self.constellation);
            push_uint(label, width, &mut out);
        }
        Ok(out)
    }
}

impl FrameLink for OtfsLink {
    fn bits_per_frame(&self) -> usize {
        self.cfg.grid_size() * self.constellation.bits_per_symbol()
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

/// OTFS with spatial modulation over `tx_antennas` antennas.
#[derive(Debug, Clone)]
pub struct SmLink {
    cfg: FrameConfig,
    constellation: QamConstellation,
    antenna_bits: usize,
    observer: CellObserver,
}

impl SmLink {
    /// Expects a configuration that already passed validation for OTFS-SM.
    pub fn new(cfg: &FrameConfig) -> Result<Self> {
        if !cfg.tx_antennas.is_power_of_two() {
            return Err(crate::error::ConfigError::TxAntennasNotPowerOfTwo(cfg.tx_antennas).into());
        }
        Ok(SmLink {
            cfg: cfg.clone(),
            constellation: QamConstellation::new(cfg.qam_order)?,
            antenna_bits: cfg.antenna_index_bits(),
            observer: CellObserver::for_config(cfg),
        })
    }

    pub fn constellation(&self) -> &QamConstellation {
        &self.constellation
    }

    fn bits_per_cell(&self) -> usize {
        self.antenna_bits + self.constellation.bits_per_symbol()
    }

    /// Splits a payload into per-cell antenna and symbol selections.
    pub fn map(&self, payload: &[u8]) -> Result<Vec<SmCell>, MappingError> {
        check_bits(payload, self.bits_per_frame())?;
        Ok(payload
            .chunks(self.bits_per_cell())
            .map(|block| SmCell {
                antenna: read_uint(&block[..self.antenna_bits]) + 1,
                label: read_uint(&block[self.antenna_bits..]),
            })
            .collect())
    }

    pub fn demap(&self, cells: &[SmCell]) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.bits_per_frame());
        for cell in cells {
            push_uint(cell.antenna - 1, self.antenna_bits, &mut out);
            push_uint(cell.label, self.constellation.bits_per_symbol(), &mut out);
        }
        out
    }

    /// One channel realization per transmit antenna.
    pub fn sample_channels<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<ChannelRealization> {
        sample_tx_path_sets(&self.cfg, self.cfg.tx_antennas, rng)
            .into_iter()
            .map(|paths| ChannelRealization::with_operators(paths, self.observer.operators()))
            .collect()
    }

    /// Sends `payload` with antenna `t` seeing `realizations[t - 1]`.
    pub fn transceive<R: Rng + ?Sized>(
        &self,
        payload: &[u8],
        realizations: &[ChannelRealization],
        snr_db: f64,
        rng: &mut R,
    ) -> Result<Vec<u8>> {
        if realizations.len() != self.cfg.tx_antennas {
            return Err(DimensionError::new(
                "per-antenna channel realizations",
                self.cfg.tx_antennas,
                realizations.len(),
            )
            .into());
        }
        let cells = self.map(payload)?;
        let mut detected = Vec::with_capacity(cells.len());
        for (v, cell) in cells.iter().enumerate() {
            let s = self.constellation.point(cell.label);
            let y = single_column(self.observer.observe(
                &realizations[cell.antenna - 1],
                v,
                &[s],
                snr_db,
                rng,
            )?);
            let columns: Vec<_> = realizations.iter().map(|r| r.column(v)).collect();
            detected.push(ml_detect_sm(&y, &columns, &self.constellation));
        }
        Ok(self.demap(&detected))
    }
}

impl FrameLink for SmLink {
    fn bits_per_frame(&self) -> usize {
        self.cfg.grid_size() * self.bits_per_cell()
    }

    fn simulate_frame(&self, rngs: &mut FrameRngs, snr_db: f64) -> Result<FrameOutcome> {
        let payload = random_payload(self.bits_per_frame(), &mut rngs.payload);
        let realizations = self.sample_channels(&mut rngs.channel);
        let detected = self.transceive(&payload, &realizations, snr_db, &mut rngs.noise)?;
        Ok(FrameOutcome {
            bits: payload.len() as u64,
            errors: count_errors(&payload, &detected),
        })
    }
}

/// Sends `payload` over plain OTFS and returns the detected bits.
pub fn otfs_transceive<R: Rng + ?Sized>(
    payload: &[u8],
    cfg: &FrameConfig,
    realization: &ChannelRealization,
    snr_db: f64,
    rng: &mut R,
) -> Result<Vec<u8>> {
    OtfsLink::new(cfg)?.transceive(payload, realization, snr_db, rng)
}

/// Sends `payload` over OTFS-SM and returns the detected bits.
pub fn otfs_sm_transceive<R: Rng + ?Sized>(
    payload: &[u8],
    cfg: &FrameConfig,
    realizations: &[ChannelRealization],
    snr_db: f64,
    rng: &mut R,
) -> Result<Vec<u8>> {
    SmLink::new(cfg)?.transceive(payload, realizations, snr_db, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rngs(seed: u64) -> FrameRngs {
        FrameRngs {
            payload: ChaCha8Rng::seed_from_u64(seed),
            channel: ChaCha8Rng::seed_from_u64(seed + 1),
            noise: ChaCha8Rng::seed_from_u64(seed + 2),
        }
    }

    fn sm_cfg(mq: usize, n_t: usize) -> FrameConfig {
        FrameConfig {
            qam_order: mq,
            tx_antennas: n_t,
            ..FrameConfig::default()
        }
    }

    #[test]
    fn payload_sizes_match_24_bits_per_frame() {
        let otfs = OtfsLink::new(&FrameConfig {
            qam_order: 64,
            ..FrameConfig::default()
        })
        .unwrap();
        assert_eq!(otfs.bits_per_frame(), 24);
        assert_eq!(SmLink::new(&sm_cfg(16, 4)).unwrap().bits_per_frame(), 24);
    }

    #[test]
    fn single_antenna_sm_equals_otfs() {
        for snr in [0.0, 10.0, 20.0] {
            let cfg = sm_cfg(16, 1);
            let otfs = OtfsLink::new(&cfg).unwrap();
            let sm = SmLink::new(&cfg).unwrap();
            for seed in 0..30 {
                let mut a = rngs(seed * 3);
                let mut b = rngs(seed * 3);
                assert_eq!(
                    otfs.simulate_frame(&mut a, snr).unwrap(),
                    sm.simulate_frame(&mut b, snr).unwrap()
                );
                // streams stay in lockstep
                assert_eq!(a.noise, b.noise);
                assert_eq!(a.channel, b.channel);
            }
        }
    }

    #[test]
    fn noiseless_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (mq, n_t) in [(4, 1), (64, 1), (16, 4), (32, 8), (8, 2)] {
            let cfg = sm_cfg(mq, n_t);
            let sm = SmLink::new(&cfg).unwrap();
            let otfs = OtfsLink::new(&cfg).unwrap();
            for _ in 0..40 {
                let payload = random_payload(sm.bits_per_frame(), &mut rng);
                let channels = sm.sample_channels(&mut rng);
                let out = sm
                    .transceive(&payload, &channels, f64::INFINITY, &mut rng)
                    .unwrap();
                assert_eq!(out, payload);

                let payload = random_payload(otfs.bits_per_frame(), &mut rng);
                let out = otfs
                    .transceive(&payload, &channels[0], f64::INFINITY, &mut rng)
                    .unwrap();
                assert_eq!(out, payload);
            }
        }
    }

    #[test]
    fn sm_mapping_layout() {
        let sm = SmLink::new(&sm_cfg(4, 4)).unwrap();
        let payload = [1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1];
        let cells = sm.map(&payload).unwrap();
        assert_eq!(
            cells[0],
            SmCell {
                antenna: 3,
                label: 3
            }
        );
        assert_eq!(
            cells[1],
            SmCell {
                antenna: 2,
                label: 0
            }
        );
        assert_eq!(
            cells[2],
            SmCell {
                antenna: 4,
                label: 2
            }
        );
        assert_eq!(
            cells[3],
            SmCell {
                antenna: 1,
                label: 1
            }
        );
        assert_eq!(sm.demap(&cells), payload);
    }

    #[test]
    fn wrong_sizes_rejected() {
        let cfg = sm_cfg(16, 4);
        let sm = SmLink::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let channels = sm.sample_channels(&mut rng);
        assert!(sm.transceive(&[0; 23], &channels, 10.0, &mut rng).is_err());
        assert!(sm
            .transceive(&[0; 24], &channels[..2], 10.0, &mut rng)
            .is_err());
        assert!(SmLink::new(&sm_cfg(16, 3)).is_err());
    }

    #[test]
    fn ber_falls_with_snr() {
        let cfg = FrameConfig {
            rx_antennas: 2,
            ..sm_cfg(16, 4)
        };
        let links: [Box<dyn FrameLink>; 2] = [
            Box::new(OtfsLink::new(&cfg).unwrap()),
            Box::new(SmLink::new(&cfg).unwrap()),
        ];
        for link in &links {
            let ber = |snr: f64| {
                let mut r = rngs(100);
                let (mut e, mut b) = (0, 0);
                for _ in 0..400 {
                    let o = link.simulate_frame(&mut r, snr).unwrap();
                    e += o.errors;
                    b += o.bits;
                }
                e as f64 / b as f64
            };
            let (low, high) = (ber(0.0), ber(15.0));
            assert!(low > high, "{low} vs {high}");
        }
    }

    #[test]
    fn ml_detectors_match_scalar_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = QamConstellation::new(16).unwrap();
        let gauss = |rng: &mut ChaCha8Rng| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        };
        for _ in 0..200 {
            let y = DVector::from_fn(3, |_, _| gauss(&mut rng));
            let hs: Vec<_> = (0..4)
                .map(|_| DVector::from_fn(3, |_, _| gauss(&mut rng)))
                .collect();
            let got = ml_detect_sm(&y, &hs, &c);
            let metric = |t: usize, l: usize| -> f64 {
                (0..3)
                    .map(|r| (y[r] - c.point(l) * hs[t][r]).norm_sqr())
                    .sum()
            };
            for t in 0..4 {
                for l in 0..16 {
                    assert!(metric(got.antenna - 1, got.label) <= metric(t, l) + 1e-12);
                }
            }
            let l = ml_detect_symbol(&y, &hs[0], &c);
            assert!((0..16).all(|k| metric(0, l) <= metric(0, k) + 1e-12));
        }
    }
}
