//! Bit mapping: QAM constellations and the OTFS-CIM cell mapper.
//!
//! Each delay-Doppler cell carries `log2(N_C)` bits choosing the I-branch
//! code, `log2(N_C)` bits choosing the Q-branch code and `log2(Mq)` bits
//! choosing the QAM point, in that order, most significant bit first. Cells
//! are filled row-major over the grid (delay index fastest).
//!
//! Square constellations are labelled per axis: the first half of the symbol
//! bits picks the real level through a Gray code (bit 0 gives the most
//! negative level), the second half picks the imaginary level the other way
//! round (bit 0 gives the most positive level). For 4-QAM this reproduces
//! the labels `01 -> (-1, -1)` and `11 -> (+1, -1)`.

use num_complex::Complex64;

use crate::config::{log2_exact, FrameConfig};
use crate::error::MappingError;

const POINT_TOLERANCE: f64 = 1e-9;

/// Shape family of a constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstellationKind {
    /// √Mq × √Mq grid, Gray coded per axis.
    Square,
    /// 4×2 grid used for 8-QAM, Gray coded per axis.
    Rectangular,
    /// Square grid with the four corner blocks removed (32, 128, ... QAM),
    /// labelled in row-major order.
    Cross,
}

/// A unit-average-energy QAM alphabet. `points[label]` is the point whose
/// bit label is `label`.
#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    order: usize,
    points: Vec<Complex64>,
    scale: f64,
    kind: ConstellationKind,
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Amplitude of level `i` on an axis with `levels` odd-integer levels.
fn level(i: usize, levels: usize) -> f64 {
    2.0 * i as f64 - (levels as f64 - 1.0)
}

impl QamConstellation {
    /// Builds the constellation of order `order` (a power of two, at least 4).
    pub fn new(order: usize) -> Result<Self, MappingError> {
        let bits = match log2_exact(order) {
            Some(b) if b >= 2 => b,
            _ => return Err(MappingError::UnsupportedOrder(order)),
        };
        let (raw, kind) = if bits % 2 == 0 {
            (Self::square_points(bits / 2), ConstellationKind::Square)
        } else if bits == 3 {
            (
                Self::rectangular_points(2, 1),
                ConstellationKind::Rectangular,
            )
        } else {
            (Self::cross_points(bits), ConstellationKind::Cross)
        };
        let energy = raw.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
        let scale = 1.0 / energy.sqrt();
        Ok(QamConstellation {
            order,
            points: raw.into_iter().map(|p| p * scale).collect(),
            scale,
            kind,
        })
    }

    fn square_points(axis_bits: usize) -> Vec<Complex64> {
        Self::rectangular_points(axis_bits, axis_bits)
    }

    fn rectangular_points(re_bits: usize, im_bits: usize) -> Vec<Complex64> {
        let re_levels = 1 << re_bits;
        let im_levels = 1 << im_bits;
        (0..re_levels * im_levels)
            .map(|label| {
                let re = level(gray_decode(label >> im_bits), re_levels);
                let im = -level(gray_decode(label & (im_levels - 1)), im_levels);
                Complex64::new(re, im)
            })
            .collect()
    }

    fn cross_points(bits: usize) -> Vec<Complex64> {
        let k = (bits - 1) / 2;
        let side = 3 << (k - 1);
        let corner = 1 << (k - 2);
        let outer = |i: usize| i < corner || i >= side - corner;
        let mut points = Vec::with_capacity(1 << bits);
        for i_re in 0..side {
            for i_im in 0..side {
                if outer(i_re) && outer(i_im) {
                    continue;
                }
                points.push(Complex64::new(level(i_re, side), -level(i_im, side)));
            }
        }
        debug_assert_eq!(points.len(), 1 << bits);
        points
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Bit label of every point, in the order of [`points`](Self::points).
    pub fn bit_labels(&self) -> impl Iterator<Item = usize> + '_ {
        0..self.order
    }

    /// Factor applied to the odd-integer grid to reach unit average energy.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    /// Label of the point equal to `value`, if any.
    pub fn label_of(&self, value: Complex64) -> Option<usize> {
        self.points.iter().position(|p| {
            (p.re - value.re).abs() < POINT_TOLERANCE && (p.im - value.im).abs() < POINT_TOLERANCE
        })
    }

    /// Label of the point closest to `value`; ties go to the lowest label.
    pub fn nearest(&self, value: Complex64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (value - p).norm_sqr();
            if d < best_dist {
                best = label;
                best_dist = d;
            }
        }
        best
    }
}

/// What one OTFS-CIM cell transmits: a QAM point split into its real and
/// imaginary parts, and the 1-based code index used on each branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CimCell {
    pub s_re: f64,
    pub s_im: f64,
    pub c_re: usize,
    pub c_im: usize,
}

impl CimCell {
    pub fn symbol(&self) -> Complex64 {
        Complex64::new(self.s_re, self.s_im)
    }
}

/// An N×M grid of cell selections together with the payload they encode.
#[derive(Debug, Clone, PartialEq)]
pub struct DdFrame {
    pub doppler_bins: usize,
    pub delay_bins: usize,
    /// Row-major: cell `(k, l)` sits at `k * delay_bins + l`.
    pub cells: Vec<CimCell>,
    pub payload: Vec<u8>,
}

impl DdFrame {
    pub fn cell(&self, k: usize, l: usize) -> &CimCell {
        &self.cells[k * self.delay_bins + l]
    }
}

pub(crate) fn read_uint(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

pub(crate) fn push_uint(value: usize, width: usize, out: &mut Vec<u8>) {
    out.extend((0..width).rev().map(|i| ((value >> i) & 1) as u8));
}

pub(crate) fn check_bits(payload: &[u8], expected: usize) -> Result<(), MappingError> {
    if payload.len() != expected {
        return Err(MappingError::LengthMismatch {
            expected,
            actual: payload.len(),
        });
    }
    if let Some(pos) = payload.iter().position(|&b| b > 1) {
        return Err(MappingError::NotABit(pos));
    }
    Ok(())
}

/// Maps payloads onto OTFS-CIM cells and back for one configuration.
#[derive(Debug, Clone)]
pub struct CimMapper {
    constellation: QamConstellation,
    doppler_bins: usize,
    delay_bins: usize,
    num_codes: usize,
    index_bits: usize,
    symbol_bits: usize,
}

impl CimMapper {
    /// Expects a configuration that already passed validation.
    pub fn new(cfg: &FrameConfig) -> Result<Self, MappingError> {
        Ok(CimMapper {
            constellation: QamConstellation::new(cfg.qam_order)?,
            doppler_bins: cfg.doppler_bins,
            delay_bins: cfg.delay_bins,
            num_codes: cfg.num_codes,
            index_bits: cfg.code_index_bits(),
            symbol_bits: cfg.symbol_bits(),
        })
    }

    pub fn constellation(&self) -> &QamConstellation {
        &self.constellation
    }

    pub fn bits_per_cell(&self) -> usize {
        2 * self.index_bits + self.symbol_bits
    }

    pub fn bits_per_frame(&self) -> usize {
        self.doppler_bins * self.delay_bins * self.bits_per_cell()
    }

    pub fn map(&self, payload: &[u8]) -> Result<DdFrame, MappingError> {
        check_bits(payload, self.bits_per_frame())?;
        let ib = self.index_bits;
        let cells = payload
            .chunks(self.bits_per_cell())
            .map(|block| {
                let c_re = read_uint(&block[..ib]) + 1;
                let c_im = read_uint(&block[ib..2 * ib]) + 1;
                let s = self.constellation.point(read_uint(&block[2 * ib..]));
                CimCell {
                    s_re: s.re,
                    s_im: s.im,
                    c_re,
                    c_im,
                }
            })
            .collect();
        Ok(DdFrame {
            doppler_bins: self.doppler_bins,
            delay_bins: self.delay_bins,
            cells,
            payload: payload.to_vec(),
        })
    }

    pub fn demap(&self, cells: &[CimCell]) -> Result<Vec<u8>, MappingError> {
        let expected = self.doppler_bins * self.delay_bins;
        if cells.len() != expected {
            return Err(MappingError::OutOfAlphabet {
                index: cells.len().min(expected),
                reason: format!("frame has {} cells, expected {expected}", cells.len()),
            });
        }
        let mut bits = Vec::with_capacity(self.bits_per_frame());
        for (index, cell) in cells.iter().enumerate() {
            for c in [cell.c_re, cell.c_im] {
                if c == 0 || c > self.num_codes {
                    return Err(MappingError::OutOfAlphabet {
                        index,
                        reason: format!("code index {c} outside 1..={}", self.num_codes),
                    });
                }
            }
            let label = self.constellation.label_of(cell.symbol()).ok_or_else(|| {
                MappingError::OutOfAlphabet {
                    index,
                    reason: format!("symbol {} is not a constellation point", cell.symbol()),
                }
            })?;
            push_uint(cell.c_re - 1, self.index_bits, &mut bits);
            push_uint(cell.c_im - 1, self.index_bits, &mut bits);
            push_uint(label, self.symbol_bits, &mut bits);
        }
        Ok(bits)
    }
}

/// Unit-energy Mq-QAM constellation.
pub fn build_constellation(order: usize) -> Result<QamConstellation, MappingError> {
    QamConstellation::new(order)
}

/// Splits `payload` into per-cell CIM selections.
pub fn map_bits(payload: &[u8], cfg: &FrameConfig) -> Result<DdFrame, MappingError> {
    CimMapper::new(cfg)?.map(payload)
}

/// Inverse of [`map_bits`].
pub fn demap_frame(cells: &[CimCell], cfg: &FrameConfig) -> Result<Vec<u8>, MappingError> {
    CimMapper::new(cfg)?.demap(cells)
}
