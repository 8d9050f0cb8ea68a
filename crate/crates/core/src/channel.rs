//! Time-varying multipath channel in the delay-Doppler domain.
//!
//! Every path `u` has an integer delay tap `k_u` (in samples of the N·M
//! sample frame, spacing 1/(MΔf)), a real Doppler index `l_u` (cycles per
//! frame, fractional values allowed) and one complex gain per receive
//! antenna. Receive antenna `r` sees
//!
//! ```text
//! G^r = Σ_u h_u^r · Δ(l_u) · Π^{k_u},   Δ(l) = diag(e^{j2π l t/(NM)}),
//! ```
//!
//! with `Π` the cyclic one-sample delay. The antenna blocks are stacked
//! vertically into `G` and the delay-Doppler effective channel is
//!
//! ```text
//! H_eff = (I_{N_R} ⊗ F_N ⊗ I_M) · G · (F_N^H ⊗ I_M).
//! ```
//!
//! Reordering the rows of `G` slot-major across antennas turns the left
//! factor into `F_N ⊗ I_{N_R·M}`; both orderings describe the same channel.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::FrameConfig;
use crate::error::DimensionError;
use crate::transforms::OtfsOperators;

/// Delays, Doppler indices and per-antenna gains of one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    /// k_u, distinct.
    pub delays: Vec<usize>,
    /// l_u.
    pub dopplers: Vec<f64>,
    /// `gains[r][u]` = h_u^r.
    pub gains: Vec<Vec<Complex64>>,
}

impl PathSet {
    /// A single unit path with no delay and no Doppler on every antenna.
    pub fn identity(rx_antennas: usize) -> Self {
        PathSet {
            delays: vec![0],
            dopplers: vec![0.0],
            gains: vec![vec![Complex64::new(1.0, 0.0)]; rx_antennas],
        }
    }

    pub fn num_paths(&self) -> usize {
        self.delays.len()
    }

    pub fn rx_antennas(&self) -> usize {
        self.gains.len()
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * sd, im * sd)
}

fn sample_dopplers<R: Rng + ?Sized>(cfg: &FrameConfig, rng: &mut R) -> Vec<f64> {
    let l_max = cfg.timing().max_doppler_index();
    (0..cfg.taps)
        .map(|_| {
            let theta = rng.random::<f64>() * 2.0 * PI;
            l_max * theta.cos()
        })
        .collect()
}

fn sample_gains<R: Rng + ?Sized>(cfg: &FrameConfig, rng: &mut R) -> Vec<Vec<Complex64>> {
    let var = 1.0 / cfg.taps as f64;
    (0..cfg.rx_antennas)
        .map(|_| (0..cfg.taps).map(|_| complex_gaussian(rng, var)).collect())
        .collect()
}

/// Draws a Rayleigh path set with a uniform power-delay profile.
///
/// Delay taps are `0..P`; Doppler indices follow the Jakes model
/// `l_u = l_max·cos θ_u`, θ_u uniform, with `l_max = f_d·N·T_s`; gains are
/// CN(0, 1/P), independent across receive antennas. Draw order: the P
/// angles first, then the gains antenna by antenna.
pub fn sample_paths<R: Rng + ?Sized>(cfg: &FrameConfig, rng: &mut R) -> PathSet {
    let dopplers = sample_dopplers(cfg, rng);
    PathSet {
        delays: (0..cfg.taps).collect(),
        dopplers,
        gains: sample_gains(cfg, rng),
    }
}

/// One path set per transmit antenna, sharing delays and Doppler indices
/// but with independent gains. With one transmit antenna this consumes the
/// RNG exactly like [`sample_paths`].
pub fn sample_tx_path_sets<R: Rng + ?Sized>(
    cfg: &FrameConfig,
    tx_antennas: usize,
    rng: &mut R,
) -> Vec<PathSet> {
    let dopplers = sample_dopplers(cfg, rng);
    (0..tx_antennas)
        .map(|_| PathSet {
            delays: (0..cfg.taps).collect(),
            dopplers: dopplers.clone(),
            gains: sample_gains(cfg, rng),
        })
        .collect()
}

/// Time-domain channel matrix, (N_R·N·M) × (N·M).
pub fn build_time_matrix(paths: &PathSet, frame_len: usize) -> DMatrix<Complex64> {
    let n_r = paths.rx_antennas();
    let mut g = DMatrix::zeros(n_r * frame_len, frame_len);
    for (u, (&delay, &doppler)) in paths.delays.iter().zip(&paths.dopplers).enumerate() {
        for t in 0..frame_len {
            let rot = Complex64::from_polar(1.0, 2.0 * PI * doppler * t as f64 / frame_len as f64);
            let src = (t + frame_len - delay % frame_len) % frame_len;
            for (r, gains) in paths.gains.iter().enumerate() {
                g[(r * frame_len + t, src)] += gains[u] * rot;
            }
        }
    }
    g
}

fn check_time_matrix(g: &DMatrix<Complex64>, nm: usize) -> Result<(), DimensionError> {
    if nm == 0 || g.ncols() != nm || !g.nrows().is_multiple_of(nm) || g.nrows() == 0 {
        return Err(DimensionError::new(
            "time-domain channel matrix",
            format!("(N_R·{nm})x{nm}"),
            format!("{}x{}", g.nrows(), g.ncols()),
        ));
    }
    Ok(())
}

/// Delay-Doppler effective channel of a time-domain matrix.
pub fn effective_channel(
    g: &DMatrix<Complex64>,
    doppler_bins: usize,
    delay_bins: usize,
) -> Result<DMatrix<Complex64>, DimensionError> {
    check_time_matrix(g, doppler_bins * delay_bins)?;
    effective_channel_with(g, &OtfsOperators::new(doppler_bins, delay_bins))
}

/// [`effective_channel`] with precomputed transform operators.
pub fn effective_channel_with(
    g: &DMatrix<Complex64>,
    ops: &OtfsOperators,
) -> Result<DMatrix<Complex64>, DimensionError> {
    let nm = ops.grid_size();
    check_time_matrix(g, nm)?;
    let through = g * ops.to_time();
    let mut h = DMatrix::zeros(g.nrows(), nm);
    for r in 0..g.nrows() / nm {
        h.rows_mut(r * nm, nm)
            .copy_from(&(ops.to_dd() * through.rows(r * nm, nm)));
    }
    Ok(h)
}

/// A path set with its time-domain and delay-Doppler matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: PathSet,
    pub time_matrix: DMatrix<Complex64>,
    pub effective: DMatrix<Complex64>,
}

impl ChannelRealization {
    pub fn new(paths: PathSet, cfg: &FrameConfig) -> Self {
        Self::with_operators(paths, &OtfsOperators::new(cfg.doppler_bins, cfg.delay_bins))
    }

    pub fn with_operators(paths: PathSet, ops: &OtfsOperators) -> Self {
        let time_matrix = build_time_matrix(&paths, ops.grid_size());
        let effective =
            effective_channel_with(&time_matrix, ops).expect("time matrix built for this grid");
        ChannelRealization {
            paths,
            time_matrix,
            effective,
        }
    }

    pub fn sample<R: Rng + ?Sized>(cfg: &FrameConfig, rng: &mut R) -> Self {
        Self::new(sample_paths(cfg, rng), cfg)
    }

    /// h_v, column `v` of the effective channel.
    pub fn column(&self, v: usize) -> DVector<Complex64> {
        self.effective.column(v).into_owned()
    }

    pub fn frame_len(&self) -> usize {
        self.time_matrix.ncols()
    }
}

/// Per-component complex noise variance N0 = Es/10^(SNR/10) with Es = 1.
/// An infinite SNR disables noise.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// Passes each transmitted chip frame through `G` and adds white complex
/// Gaussian noise of variance N0. The realization is held fixed across all
/// chips.
pub fn apply_channel<R: Rng + ?Sized>(
    chip_frames: &[DVector<Complex64>],
    realization: &ChannelRealization,
    snr_db: f64,
    rng: &mut R,
) -> Result<Vec<DVector<Complex64>>, DimensionError> {
    let n0 = noise_variance(snr_db);
    chip_frames
        .iter()
        .map(|x| {
            if x.len() != realization.frame_len() {
                return Err(DimensionError::new(
                    "transmitted chip frame",
                    realization.frame_len(),
                    x.len(),
                ));
            }
            let mut y = &realization.time_matrix * x;
            if n0 > 0.0 {
                y.iter_mut().for_each(|v| *v += complex_gaussian(rng, n0));
            }
            Ok(y)
        })
        .collect()
}
