//! Delay-Doppler ↔ time-frequency ↔ time conversions with rectangular
//! pulses.
//!
//! * ISFFT: `S[n,m] = 1/√(NM) Σ_k Σ_l s[k,l] e^{j2π(nk/N − ml/M)}`
//! * SFFT: its inverse.
//! * Heisenberg: an M-point inverse DFT of every time slot, producing the
//!   slot-major sample vector `x[n·M + t]`.
//! * Wigner: the per-slot forward DFT that undoes it.
//!
//! All four are unitary. Chained, ISFFT followed by Heisenberg reduces to
//! an N-point inverse DFT across slots for each delay bin, i.e. the matrix
//! `F_N^H ⊗ I_M` acting on the delay-major vector `s[k·M + l]`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::DimensionError;

macro_rules! grid_type {
    ($(#[$doc:meta])* $name:ident, $rows:ident, $cols:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            $rows: usize,
            $cols: usize,
            values: Vec<Complex64>,
        }

        impl $name {
            pub fn zeros($rows: usize, $cols: usize) -> Self {
                $name { $rows, $cols, values: vec![Complex64::new(0.0, 0.0); $rows * $cols] }
            }

            pub fn from_fn(
                $rows: usize,
                $cols: usize,
                mut f: impl FnMut(usize, usize) -> Complex64,
            ) -> Self {
                let values = (0..$rows * $cols).map(|i| f(i / $cols, i % $cols)).collect();
                $name { $rows, $cols, values }
            }

            /// Wraps a row-major vector of length `rows · cols`.
            pub fn from_vec(
                $rows: usize,
                $cols: usize,
                values: Vec<Complex64>,
            ) -> Result<Self, DimensionError> {
                if values.len() != $rows * $cols {
                    return Err(DimensionError::new(
                        stringify!($name),
                        $rows * $cols,
                        values.len(),
                    ));
                }
                Ok($name { $rows, $cols, values })
            }

            pub fn $rows(&self) -> usize {
                self.$rows
            }

            pub fn $cols(&self) -> usize {
                self.$cols
            }

            pub fn get(&self, row: usize, col: usize) -> Complex64 {
                self.values[row * self.$cols + col]
            }

            pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
                self.values[row * self.$cols + col] = value;
            }

            pub fn as_slice(&self) -> &[Complex64] {
                &self.values
            }

            pub fn into_vec(self) -> Vec<Complex64> {
                self.values
            }

            /// Σ |value|².
            pub fn energy(&self) -> f64 {
                self.values.iter().map(|v| v.norm_sqr()).sum()
            }
        }
    };
}

grid_type!(
    /// Delay-Doppler grid, indexed `(k, l)` = (Doppler bin, delay bin).
    DdGrid, doppler_bins, delay_bins
);
grid_type!(
    /// Time-frequency grid, indexed `(n, m)` = (time slot, subcarrier).
    TfGrid, time_slots, subcarriers
);

/// Pre-planned transforms for an N × M frame.
#[derive(Clone)]
pub struct OtfsTransform {
    n: usize,
    m: usize,
    fwd_n: Arc<dyn Fft<f64>>,
    inv_n: Arc<dyn Fft<f64>>,
    fwd_m: Arc<dyn Fft<f64>>,
    inv_m: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for OtfsTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OtfsTransform")
            .field("n", &self.n)
            .field("m", &self.m)
            .finish()
    }
}

impl OtfsTransform {
    pub fn new(doppler_bins: usize, delay_bins: usize) -> Self {
        let mut planner = FftPlanner::new();
        OtfsTransform {
            n: doppler_bins,
            m: delay_bins,
            fwd_n: planner.plan_fft_forward(doppler_bins),
            inv_n: planner.plan_fft_inverse(doppler_bins),
            fwd_m: planner.plan_fft_forward(delay_bins),
            inv_m: planner.plan_fft_inverse(delay_bins),
        }
    }

    pub fn doppler_bins(&self) -> usize {
        self.n
    }

    pub fn delay_bins(&self) -> usize {
        self.m
    }

    fn check(&self, context: &'static str, rows: usize, cols: usize) -> Result<(), DimensionError> {
        if (rows, cols) != (self.n, self.m) {
            return Err(DimensionError::new(
                context,
                format!("{}x{}", self.n, self.m),
                format!("{rows}x{cols}"),
            ));
        }
        Ok(())
    }

    /// Runs `fft` down every column of a row-major N × M buffer.
    fn columns(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let mut col = vec![Complex64::new(0.0, 0.0); self.n];
        for l in 0..self.m {
            for k in 0..self.n {
                col[k] = data[k * self.m + l];
            }
            fft.process(&mut col);
            for k in 0..self.n {
                data[k * self.m + l] = col[k];
            }
        }
    }

    fn scale(data: &mut [Complex64], factor: f64) {
        data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn isfft(&self, dd: &DdGrid) -> Result<TfGrid, DimensionError> {
        self.check("ISFFT input", dd.doppler_bins(), dd.delay_bins())?;
        let mut data = dd.as_slice().to_vec();
        self.columns(&self.inv_n, &mut data);
        self.fwd_m.process(&mut data);
        Self::scale(&mut data, 1.0 / ((self.n * self.m) as f64).sqrt());
        TfGrid::from_vec(self.n, self.m, data)
    }

    pub fn sfft(&self, tf: &TfGrid) -> Result<DdGrid, DimensionError> {
        self.check("SFFT input", tf.time_slots(), tf.subcarriers())?;
        let mut data = tf.as_slice().to_vec();
        self.columns(&self.fwd_n, &mut data);
        self.inv_m.process(&mut data);
        Self::scale(&mut data, 1.0 / ((self.n * self.m) as f64).sqrt());
        DdGrid::from_vec(self.n, self.m, data)
    }

    pub fn heisenberg(&self, tf: &TfGrid) -> Result<DVector<Complex64>, DimensionError> {
        self.check("Heisenberg input", tf.time_slots(), tf.subcarriers())?;
        let mut data = tf.as_slice().to_vec();
        self.inv_m.process(&mut data);
        Self::scale(&mut data, 1.0 / (self.m as f64).sqrt());
        Ok(DVector::from_vec(data))
    }

    pub fn wigner(&self, samples: &[Complex64]) -> Result<TfGrid, DimensionError> {
        if samples.len() != self.n * self.m {
            return Err(DimensionError::new(
                "Wigner input length",
                self.n * self.m,
                samples.len(),
            ));
        }
        let mut data = samples.to_vec();
        self.fwd_m.process(&mut data);
        Self::scale(&mut data, 1.0 / (self.m as f64).sqrt());
        TfGrid::from_vec(self.n, self.m, data)
    }

    /// ISFFT then Heisenberg.
    pub fn dd_to_time(&self, dd: &DdGrid) -> Result<DVector<Complex64>, DimensionError> {
        self.heisenberg(&self.isfft(dd)?)
    }

    /// Wigner then SFFT.
    pub fn time_to_dd(&self, samples: &[Complex64]) -> Result<DdGrid, DimensionError> {
        self.sfft(&self.wigner(samples)?)
    }
}

/// Dense matrices of [`OtfsTransform::dd_to_time`] and
/// [`OtfsTransform::time_to_dd`] acting on row-major grids, assembled column
/// by column from the FFT kernels. Cheaper than the FFTs for small frames.
#[derive(Debug, Clone, PartialEq)]
pub struct OtfsOperators {
    doppler_bins: usize,
    delay_bins: usize,
    to_time: DMatrix<Complex64>,
    to_dd: DMatrix<Complex64>,
}

impl OtfsOperators {
    pub fn new(doppler_bins: usize, delay_bins: usize) -> Self {
        Self::from_transform(&OtfsTransform::new(doppler_bins, delay_bins))
    }

    pub fn from_transform(t: &OtfsTransform) -> Self {
        let (n, m) = (t.doppler_bins(), t.delay_bins());
        let nm = n * m;
        let unit = |i: usize| {
            let mut v = vec![Complex64::new(0.0, 0.0); nm];
            v[i] = Complex64::new(1.0, 0.0);
            v
        };
        let mut to_time = DMatrix::zeros(nm, nm);
        let mut to_dd = DMatrix::zeros(nm, nm);
        for i in 0..nm {
            let grid = DdGrid::from_vec(n, m, unit(i)).expect("sized for the frame");
            let x = t.dd_to_time(&grid).expect("sized for the frame");
            to_time.set_column(i, &x);
            let back = t.time_to_dd(&unit(i)).expect("sized for the frame");
            to_dd.set_column(i, &DVector::from_column_slice(back.as_slice()));
        }
        OtfsOperators {
            doppler_bins: n,
            delay_bins: m,
            to_time,
            to_dd,
        }
    }

    pub fn doppler_bins(&self) -> usize {
        self.doppler_bins
    }

    pub fn delay_bins(&self) -> usize {
        self.delay_bins
    }

    pub fn grid_size(&self) -> usize {
        self.doppler_bins * self.delay_bins
    }

    /// ISFFT followed by Heisenberg, (N·M) × (N·M).
    pub fn to_time(&self) -> &DMatrix<Complex64> {
        &self.to_time
    }

    /// Wigner followed by SFFT, (N·M) × (N·M).
    pub fn to_dd(&self) -> &DMatrix<Complex64> {
        &self.to_dd
    }
}

pub fn isfft(dd: &DdGrid) -> TfGrid {
    OtfsTransform::new(dd.doppler_bins(), dd.delay_bins())
        .isfft(dd)
        .expect("planned for this size")
}

pub fn sfft(tf: &TfGrid) -> DdGrid {
    OtfsTransform::new(tf.time_slots(), tf.subcarriers())
        .sfft(tf)
        .expect("planned for this size")
}

pub fn heisenberg(tf: &TfGrid) -> DVector<Complex64> {
    OtfsTransform::new(tf.time_slots(), tf.subcarriers())
        .heisenberg(tf)
        .expect("planned for this size")
}

/// Inverse of [`heisenberg`] for a frame of `time_slots` slots of
/// `subcarriers` samples.
pub fn wigner(
    samples: &[Complex64],
    time_slots: usize,
    subcarriers: usize,
) -> Result<TfGrid, DimensionError> {
    OtfsTransform::new(time_slots, subcarriers).wigner(samples)
}
