//! OTFS-CIM receiver: code index estimation followed by ML symbol detection.
//!
//! Given a cell observation `Y_v` (one column per chip) and the cell's
//! effective channel column `h_v`, the correlator bank produces
//! `y_c = Y_v·z_c`. Each correlator output is projected onto `h_v`,
//! `q_c = h_vᴴ y_c / ‖h_v‖`, and split into an in-phase part
//! `Re(q_c)·ĥ_v` and a quadrature part `Im(q_c)·ĥ_v`. The I and Q code
//! indices are the correlators with the most energy on their branch, and
//! the symbol minimises `‖(ỹ_I + jỹ_Q) − s·h_v‖²` over the constellation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::FrameConfig;
use crate::error::{DetectError, DimensionError};
use crate::mapping::{CimCell, QamConstellation};
use crate::spreading::{correlate, SpreadingCodeSet};

/// Largest hypothesis count [`joint_ml_oracle`] will enumerate by default.
pub const DEFAULT_ORACLE_CAP: usize = 1 << 16;

/// Detected code indices (1-based) and constellation label of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellDecision {
    pub c_re: usize,
    pub c_im: usize,
    pub label: usize,
}

impl CellDecision {
    pub fn to_cell(&self, constellation: &QamConstellation) -> CimCell {
        let s = constellation.point(self.label);
        CimCell {
            s_re: s.re,
            s_im: s.im,
            c_re: self.c_re,
            c_im: self.c_im,
        }
    }
}

/// In-phase and quadrature components of one correlator output.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSplit {
    pub in_phase: DVector<Complex64>,
    pub quadrature: DVector<Complex64>,
}

impl BranchSplit {
    pub fn in_phase_energy(&self) -> f64 {
        self.in_phase.norm_squared()
    }

    pub fn quadrature_energy(&self) -> f64 {
        self.quadrature.norm_squared()
    }
}

fn unit_direction(channel: &DVector<Complex64>) -> Option<DVector<Complex64>> {
    let norm = channel.norm();
    (norm > 0.0).then(|| channel / Complex64::new(norm, 0.0))
}

/// Splits a correlator output along the channel direction. A zero channel
/// yields zero branches.
pub fn split_branches(
    correlator_output: &DVector<Complex64>,
    channel: &DVector<Complex64>,
) -> Result<BranchSplit, DimensionError> {
    if correlator_output.len() != channel.len() {
        return Err(DimensionError::new(
            "correlator output",
            channel.len(),
            correlator_output.len(),
        ));
    }
    let zeros = || DVector::zeros(channel.len());
    let Some(dir) = unit_direction(channel) else {
        return Ok(BranchSplit {
            in_phase: zeros(),
            quadrature: zeros(),
        });
    };
    let q = dir.dotc(correlator_output);
    Ok(BranchSplit {
        in_phase: &dir * Complex64::new(q.re, 0.0),
        quadrature: &dir * Complex64::new(q.im, 0.0),
    })
}

/// Index of the largest value, 1-based, ties to the smallest index.
fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0 + 1
}

/// I and Q code indices (1-based) from the branch energies of each
/// correlator output.
pub fn estimate_code_indices(splits: &[BranchSplit]) -> (usize, usize) {
    (
        argmax_first(splits.iter().map(BranchSplit::in_phase_energy)),
        argmax_first(splits.iter().map(BranchSplit::quadrature_energy)),
    )
}

/// Label minimising `‖y − s·h‖²` given `hᴴy` and `‖h‖²`, using
/// `‖y − s·h‖² = ‖y‖² − 2·Re(s*·hᴴy) + |s|²·‖h‖²`. Ties go to the lowest
/// label; also returns the metric without the constant `‖y‖²`.
pub(crate) fn ml_label(
    channel_dot_obs: Complex64,
    channel_energy: f64,
    constellation: &QamConstellation,
) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (label, s) in constellation.points().iter().enumerate() {
        let d = s.norm_sqr() * channel_energy - 2.0 * (s.conj() * channel_dot_obs).re;
        if d < best.1 {
            best = (label, d);
        }
    }
    best
}

/// Constellation label minimising `‖(in_phase + j·quadrature) − s·h‖²`,
/// ties to the lowest label.
pub fn ml_symbol(
    in_phase: &DVector<Complex64>,
    quadrature: &DVector<Complex64>,
    channel: &DVector<Complex64>,
    constellation: &QamConstellation,
) -> usize {
    let j = Complex64::new(0.0, 1.0);
    let dot = channel.dotc(in_phase) + j * channel.dotc(quadrature);
    ml_label(dot, channel.norm_squared(), constellation).0
}

/// Detects one cell from its observation.
pub fn detect_cell(
    observation: &DMatrix<Complex64>,
    channel: &DVector<Complex64>,
    codes: &SpreadingCodeSet,
    constellation: &QamConstellation,
) -> Result<CellDecision, DetectError> {
    check_observation(observation, channel, codes)?;
    let splits = correlate(observation, codes)?
        .iter()
        .map(|y| split_branches(y, channel))
        .collect::<Result<Vec<_>, _>>()?;
    let (c_re, c_im) = estimate_code_indices(&splits);
    let label = ml_symbol(
        &splits[c_re - 1].in_phase,
        &splits[c_im - 1].quadrature,
        channel,
        constellation,
    );
    Ok(CellDecision { c_re, c_im, label })
}

/// Detects every cell; `effective_channel` column `v` belongs to
/// `observations[v]`.
pub fn detect_frame(
    observations: &[DMatrix<Complex64>],
    effective_channel: &DMatrix<Complex64>,
    codes: &SpreadingCodeSet,
    constellation: &QamConstellation,
) -> Result<Vec<CellDecision>, DetectError> {
    if observations.len() != effective_channel.ncols() {
        return Err(DimensionError::new(
            "cell observations",
            effective_channel.ncols(),
            observations.len(),
        )
        .into());
    }
    observations
        .iter()
        .enumerate()
        .map(|(v, y)| {
            detect_cell(
                y,
                &effective_channel.column(v).into_owned(),
                codes,
                constellation,
            )
        })
        .collect()
}

fn check_observation(
    observation: &DMatrix<Complex64>,
    channel: &DVector<Complex64>,
    codes: &SpreadingCodeSet,
) -> Result<(), DimensionError> {
    if observation.nrows() != channel.len() || observation.ncols() != codes.length() {
        return Err(DimensionError::new(
            "cell observation",
            format!("{}x{}", channel.len(), codes.length()),
            format!("{}x{}", observation.nrows(), observation.ncols()),
        ));
    }
    Ok(())
}

/// Exhaustive joint search over both code indices and the symbol,
/// minimising `Σ_ℓ ‖Y[:, ℓ] − (z_{a,ℓ}·s_re + j·z_{b,ℓ}·s_im)·h‖²`.
///
/// Refuses when `Mq·N_C²` exceeds `cap`.
pub fn joint_ml_oracle(
    observation: &DMatrix<Complex64>,
    channel: &DVector<Complex64>,
    codes: &SpreadingCodeSet,
    constellation: &QamConstellation,
    cap: usize,
) -> Result<CellDecision, DetectError> {
    check_observation(observation, channel, codes)?;
    let n_c = codes.num_codes();
    let size = constellation.order() * n_c * n_c;
    if size > cap {
        return Err(DetectError::SearchTooLarge { size, cap });
    }
    let mut best = (
        CellDecision {
            c_re: 1,
            c_im: 1,
            label: 0,
        },
        f64::INFINITY,
    );
    for c_re in 1..=n_c {
        for c_im in 1..=n_c {
            for (label, s) in constellation.points().iter().enumerate() {
                let mut metric = 0.0;
                for chip in 0..codes.length() {
                    let x = Complex64::new(
                        codes.chip(c_re, chip) * s.re,
                        codes.chip(c_im, chip) * s.im,
                    );
                    for row in 0..channel.len() {
                        metric += (observation[(row, chip)] - x * channel[row]).norm_sqr();
                    }
                }
                if metric < best.1 {
                    best = (CellDecision { c_re, c_im, label }, metric);
                }
            }
        }
    }
    Ok(best.0)
}

/// Metric evaluations per cell of the sequential detector: N_C correlator
/// energies per branch, then Mq symbol distances.
pub fn sequential_hypotheses(cfg: &FrameConfig) -> usize {
    2 * cfg.num_codes + cfg.qam_order
}

/// Metric evaluations per cell of the joint search, Mq·N_C².
pub fn joint_hypotheses(cfg: &FrameConfig) -> usize {
    cfg.qam_order * cfg.num_codes * cfg.num_codes
}
