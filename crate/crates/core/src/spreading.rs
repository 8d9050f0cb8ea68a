//! Walsh-Hadamard spreading codes, chip-level spreading and the receiver's
//! correlator bank.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::DimensionError;
use crate::mapping::CimCell;

/// Energy of one spreading code, Σ_ℓ z²_{c,ℓ}. Unit-norm codes make the
/// despread amplitude equal to the transmitted symbol component.
pub const CODE_ENERGY: f64 = 1.0;

/// `num_codes` orthonormal codes of `length` chips, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingCodeSet {
    chips: DMatrix<f64>,
}

impl SpreadingCodeSet {
    /// The first `num_codes` columns of the Sylvester-Hadamard matrix of
    /// order `length`, scaled by 1/√length.
    pub fn walsh_hadamard(length: usize, num_codes: usize) -> Result<Self, DimensionError> {
        if !length.is_power_of_two() {
            return Err(DimensionError::new(
                "Walsh-Hadamard code length",
                "a power of two",
                length,
            ));
        }
        if num_codes == 0 || num_codes > length {
            return Err(DimensionError::new(
                "Walsh-Hadamard code count",
                format!("1..={length}"),
                num_codes,
            ));
        }
        let amp = 1.0 / (length as f64).sqrt();
        // Sylvester entry (i, j) is (-1)^popcount(i & j).
        let chips = DMatrix::from_fn(length, num_codes, |chip, code| {
            if (chip & code).count_ones() % 2 == 0 {
                amp
            } else {
                -amp
            }
        });
        Ok(SpreadingCodeSet { chips })
    }

    pub fn length(&self) -> usize {
        self.chips.nrows()
    }

    pub fn num_codes(&self) -> usize {
        self.chips.ncols()
    }

    /// L × N_C chip matrix.
    pub fn chips(&self) -> &DMatrix<f64> {
        &self.chips
    }

    /// Chip `chip` (0-based) of code `code` (1-based).
    pub fn chip(&self, code: usize, chip: usize) -> f64 {
        self.chips[(chip, code - 1)]
    }

    /// Code `code` (1-based) as a column vector.
    pub fn code(&self, code: usize) -> DVector<f64> {
        self.chips.column(code - 1).into_owned()
    }
}

/// Shorthand for [`SpreadingCodeSet::walsh_hadamard`].
pub fn generate_wh(length: usize, num_codes: usize) -> Result<SpreadingCodeSet, DimensionError> {
    SpreadingCodeSet::walsh_hadamard(length, num_codes)
}

/// Chip sequences of one cell: `s_re·z_{c_re}` on the I branch and
/// `s_im·z_{c_im}` on the Q branch.
pub fn spread_cell(cell: &CimCell, codes: &SpreadingCodeSet) -> (Vec<f64>, Vec<f64>) {
    let i = (0..codes.length())
        .map(|l| cell.s_re * codes.chip(cell.c_re, l))
        .collect();
    let q = (0..codes.length())
        .map(|l| cell.s_im * codes.chip(cell.c_im, l))
        .collect();
    (i, q)
}

/// Complex chip sequence of one cell, I and Q branches on the real and
/// imaginary axes: `x_ℓ = s_re·z_{c_re,ℓ} + j·s_im·z_{c_im,ℓ}`.
pub fn cell_chips(cell: &CimCell, codes: &SpreadingCodeSet) -> Vec<Complex64> {
    let (i, q) = spread_cell(cell, codes);
    i.into_iter()
        .zip(q)
        .map(|(re, im)| Complex64::new(re, im))
        .collect()
}

/// Correlator bank: output `c` is `Y·z_c` for a received chip matrix `Y`
/// with one column per chip.
pub fn correlate(
    received: &DMatrix<Complex64>,
    codes: &SpreadingCodeSet,
) -> Result<Vec<DVector<Complex64>>, DimensionError> {
    if received.ncols() != codes.length() {
        return Err(DimensionError::new(
            "correlator chip count",
            codes.length(),
            received.ncols(),
        ));
    }
    let z = codes.chips().map(|v| Complex64::new(v, 0.0));
    let all = received * z;
    Ok(all.column_iter().map(|c| c.into_owned()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn order_two_codes() {
        let c = generate_wh(2, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        approx::assert_abs_diff_eq!(c.code(1).as_slice(), &[h, h][..], epsilon = 1e-15);
        approx::assert_abs_diff_eq!(c.code(2).as_slice(), &[h, -h][..], epsilon = 1e-15);
    }

    #[test]
    fn first_code_is_flat() {
        let c = generate_wh(4, 4).unwrap();
        assert!(c.code(1).iter().all(|&v| v == 0.5));
    }

    #[test]
    fn gram_is_identity() {
        for l in [1usize, 2, 4, 8, 16, 32] {
            for n_c in (0..=l.trailing_zeros()).map(|b| 1usize << b) {
                let c = generate_wh(l, n_c).unwrap();
                for a in 1..=n_c {
                    for b in 1..=n_c {
                        let dot: f64 = (0..l).map(|i| c.chip(a, i) * c.chip(b, i)).sum();
                        let want = if a == b { 1.0 } else { 0.0 };
                        assert!((dot - want).abs() < 1e-12, "L={l} {a},{b}: {dot}");
                    }
                }
                let amp = 1.0 / (l as f64).sqrt();
                assert!(c.chips().iter().all(|&v| (v.abs() - amp).abs() < 1e-15));
            }
        }
    }

    #[test]
    fn invalid_sizes() {
        assert!(generate_wh(6, 2).is_err());
        assert!(generate_wh(8, 16).is_err());
        assert!(generate_wh(8, 0).is_err());
    }

    #[test]
    fn spreading_examples() {
        let codes = generate_wh(2, 2).unwrap();
        let cell = CimCell {
            s_re: 1.0,
            s_im: 0.0,
            c_re: 1,
            c_im: 2,
        };
        let (i, q) = spread_cell(&cell, &codes);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        approx::assert_abs_diff_eq!(&i[..], &[h, h][..], epsilon = 1e-15);
        assert_eq!(q, vec![0.0, 0.0]);

        let codes = generate_wh(16, 8).unwrap();
        for c in 1..=8 {
            let cell = CimCell {
                s_re: -0.7,
                s_im: 0.4,
                c_re: c,
                c_im: 9 - c,
            };
            let (i, q) = spread_cell(&cell, &codes);
            let ei: f64 = i.iter().map(|v| v * v).sum();
            let eq: f64 = q.iter().map(|v| v * v).sum();
            assert!((ei - 0.49).abs() < 1e-12);
            assert!((eq - 0.16).abs() < 1e-12);
        }
    }

    #[test]
    fn correlator_separates_codes() {
        let codes = generate_wh(8, 4).unwrap();
        let cell = CimCell {
            s_re: 0.6,
            s_im: -0.8,
            c_re: 3,
            c_im: 2,
        };
        let chips = cell_chips(&cell, &codes);
        let y = DMatrix::from_fn(1, 8, |_, l| chips[l]);
        let out = correlate(&y, &codes).unwrap();
        for (c, o) in out.iter().enumerate() {
            let want = Complex64::new(
                if c + 1 == 3 { 0.6 } else { 0.0 },
                if c + 1 == 2 { -0.8 } else { 0.0 },
            );
            assert!((o[0] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn correlator_zero_input() {
        let codes = generate_wh(4, 4).unwrap();
        let out = correlate(&DMatrix::zeros(6, 4), &codes).unwrap();
        assert!(out
            .iter()
            .all(|o| o.iter().all(|v| *v == Complex64::new(0.0, 0.0))));
    }

    #[test]
    fn correlator_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let codes = generate_wh(8, 8).unwrap();
        let rows = 12;
        let y = DMatrix::from_fn(rows, 8, |_, _| {
            Complex64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        });
        let out = correlate(&y, &codes).unwrap();
        for c in 1..=8 {
            for r in 0..rows {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..8 {
                    acc += y[(r, l)] * codes.chip(c, l);
                }
                assert!((out[c - 1][r] - acc).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn correlator_dimension_mismatch() {
        let codes = generate_wh(8, 2).unwrap();
        assert!(correlate(&DMatrix::zeros(4, 4), &codes).is_err());
    }

    #[test]
    fn despreading_preserves_noise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let codes = generate_wh(8, 4).unwrap();
        let sigma2 = 0.3;
        let sd = (sigma2 / 2.0f64).sqrt();
        let trials = 100_000;
        let y = DMatrix::from_fn(trials, 8, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * sd, im * sd)
        });
        for out in correlate(&y, &codes).unwrap() {
            let var = out.iter().map(|v| v.norm_sqr()).sum::<f64>() / trials as f64;
            assert!((var / sigma2 - 1.0).abs() < 0.05, "{var}");
        }
    }
}
