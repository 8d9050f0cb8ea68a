//! Frame and system configuration, validation, bit budgets and spectral
//! efficiencies.
//!
//! A [`FrameConfig`] holds every parameter of one link: the N×M delay-Doppler
//! grid, the QAM order, the spreading code set, antenna counts and the
//! physical numbers (carrier, subcarrier spacing, speed) that fix the Doppler
//! spread. The JSON form uses the short field names `n`, `m`, `mq`, `n_c`,
//! `l`, `n_r`, `n_t`, `carrier_hz`, `delta_f_hz`, `speed_kmh` and `p`; unknown
//! keys are rejected.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// The three transceivers the simulator can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    /// OTFS with code index modulation on the I and Q branches.
    OtfsCim,
    /// Plain OTFS with Mq-QAM on every delay-Doppler cell.
    Otfs,
    /// OTFS with spatial modulation over N_T transmit antennas.
    OtfsSm,
}

impl System {
    pub const ALL: [System; 3] = [System::OtfsCim, System::Otfs, System::OtfsSm];

    pub fn as_str(self) -> &'static str {
        match self {
            System::OtfsCim => "otfs-cim",
            System::Otfs => "otfs",
            System::OtfsSm => "otfs-sm",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn one() -> usize {
    1
}

/// All parameters of one simulated link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    /// Doppler bins / time slots (N).
    #[serde(rename = "n")]
    pub doppler_bins: usize,
    /// Delay bins / subcarriers (M).
    #[serde(rename = "m")]
    pub delay_bins: usize,
    /// QAM order (Mq).
    #[serde(rename = "mq")]
    pub qam_order: usize,
    /// Number of spreading codes (N_C).
    #[serde(rename = "n_c")]
    pub num_codes: usize,
    /// Chips per symbol (L).
    #[serde(rename = "l")]
    pub code_length: usize,
    /// Receive antennas (N_R).
    #[serde(rename = "n_r")]
    pub rx_antennas: usize,
    /// Transmit antennas (N_T); only OTFS-SM uses more than one.
    #[serde(rename = "n_t", default = "one")]
    pub tx_antennas: usize,
    pub carrier_hz: f64,
    #[serde(rename = "delta_f_hz")]
    pub subcarrier_spacing_hz: f64,
    pub speed_kmh: f64,
    /// Channel taps (P).
    #[serde(rename = "p")]
    pub taps: usize,
}

impl Default for FrameConfig {
    /// The 24 bpcu OTFS-CIM link: 4-QAM, four codes of length 8, a 2×2 grid
    /// and eight receive antennas at 4 GHz, 15 kHz spacing, 506.2 km/h and
    /// four taps.
    fn default() -> Self {
        FrameConfig {
            doppler_bins: 2,
            delay_bins: 2,
            qam_order: 4,
            num_codes: 4,
            code_length: 8,
            rx_antennas: 8,
            tx_antennas: 1,
            carrier_hz: 4.0e9,
            subcarrier_spacing_hz: 15.0e3,
            speed_kmh: 506.2,
            taps: 4,
        }
    }
}

/// Relaxations of the strict invariant set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationPolicy {
    /// Let OTFS-CIM run non-square orders (8, 32, ...) as rectangular/cross
    /// constellations whose complex points are split into I and Q.
    #[serde(default)]
    pub allow_cross_qam: bool,
}

/// Timing quantities that follow from a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingDerived {
    /// T_c = 1/Δf.
    pub chip_duration_s: f64,
    /// T_s = L·T_c.
    pub symbol_duration_s: f64,
    /// N·T_s.
    pub frame_duration_s: f64,
    /// f_d = v·f_c/c.
    pub max_doppler_hz: f64,
}

impl TimingDerived {
    /// Largest normalised Doppler index, l_max = f_d·N·T_s.
    pub fn max_doppler_index(&self) -> f64 {
        self.max_doppler_hz * self.frame_duration_s
    }
}

pub(crate) fn log2_exact(x: usize) -> Option<usize> {
    x.is_power_of_two().then(|| x.trailing_zeros() as usize)
}

fn is_square_power_of_two(x: usize) -> bool {
    log2_exact(x).is_some_and(|b| b % 2 == 0)
}

impl FrameConfig {
    /// Reads a configuration from a JSON file. The result is not validated.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })
    }

    /// Number of delay-Doppler cells, N·M.
    pub fn grid_size(&self) -> usize {
        self.doppler_bins * self.delay_bins
    }

    /// Checks every invariant, including the square-QAM rule.
    pub fn validate(&self) -> Result<&Self, ConfigError> {
        self.check_common()?;
        if !is_square_power_of_two(self.qam_order) {
            return Err(ConfigError::NonSquareQam(self.qam_order));
        }
        Ok(self)
    }

    /// Checks the invariants that matter for `system` under `policy`.
    ///
    /// The benchmarks never split symbols into I and Q, so they accept any
    /// power-of-two order; OTFS-CIM needs a square order unless the policy
    /// allows cross constellations. OTFS-SM additionally needs a power-of-two
    /// transmit antenna count.
    pub fn validate_for(
        &self,
        system: System,
        policy: ValidationPolicy,
    ) -> Result<&Self, ConfigError> {
        self.check_common()?;
        match system {
            System::OtfsCim => {
                if !policy.allow_cross_qam && !is_square_power_of_two(self.qam_order) {
                    return Err(ConfigError::NonSquareQam(self.qam_order));
                }
            }
            System::Otfs => {}
            System::OtfsSm => {
                if !self.tx_antennas.is_power_of_two() {
                    return Err(ConfigError::TxAntennasNotPowerOfTwo(self.tx_antennas));
                }
            }
        }
        Ok(self)
    }

    fn check_common(&self) -> Result<(), ConfigError> {
        for (field, value) in [
            ("n", self.doppler_bins),
            ("m", self.delay_bins),
            ("n_r", self.rx_antennas),
            ("n_t", self.tx_antennas),
            ("p", self.taps),
            ("n_c", self.num_codes),
            ("l", self.code_length),
        ] {
            if value == 0 {
                return Err(ConfigError::Zero { field });
            }
        }
        if self.taps > self.grid_size() {
            return Err(ConfigError::TapsExceedGrid {
                taps: self.taps,
                grid: self.grid_size(),
            });
        }
        if self.qam_order < 4 || !self.qam_order.is_power_of_two() {
            return Err(ConfigError::QamOrderNotPowerOfTwo(self.qam_order));
        }
        if !self.code_length.is_power_of_two() {
            return Err(ConfigError::CodeLengthNotPowerOfTwo(self.code_length));
        }
        if self.num_codes > self.code_length {
            return Err(ConfigError::CodesExceedLength {
                codes: self.num_codes,
                length: self.code_length,
            });
        }
        if !self.num_codes.is_power_of_two() {
            return Err(ConfigError::CodesNotPowerOfTwo(self.num_codes));
        }
        for (field, value) in [
            ("delta_f_hz", self.subcarrier_spacing_hz),
            ("carrier_hz", self.carrier_hz),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::NonPositive { field, value });
            }
        }
        if !(self.speed_kmh.is_finite() && self.speed_kmh >= 0.0) {
            return Err(ConfigError::NegativeSpeed(self.speed_kmh));
        }
        Ok(())
    }

    pub fn symbol_bits(&self) -> usize {
        log2_exact(self.qam_order).expect("validated QAM order")
    }

    pub fn code_index_bits(&self) -> usize {
        log2_exact(self.num_codes).expect("validated code count")
    }

    pub fn antenna_index_bits(&self) -> usize {
        log2_exact(self.tx_antennas).expect("validated antenna count")
    }

    /// Bits carried by one OTFS-CIM cell: log2(Mq) + 2·log2(N_C).
    pub fn cim_bits_per_cell(&self) -> usize {
        self.symbol_bits() + 2 * self.code_index_bits()
    }

    /// Bits per cell for any of the three systems.
    pub fn bits_per_cell(&self, system: System) -> usize {
        match system {
            System::OtfsCim => self.cim_bits_per_cell(),
            System::Otfs => self.symbol_bits(),
            System::OtfsSm => self.symbol_bits() + self.antenna_index_bits(),
        }
    }

    pub fn timing(&self) -> TimingDerived {
        let chip_duration_s = 1.0 / self.subcarrier_spacing_hz;
        let symbol_duration_s = self.code_length as f64 * chip_duration_s;
        let speed_ms = self.speed_kmh / 3.6;
        TimingDerived {
            chip_duration_s,
            symbol_duration_s,
            frame_duration_s: self.doppler_bins as f64 * symbol_duration_s,
            max_doppler_hz: speed_ms * self.carrier_hz / SPEED_OF_LIGHT,
        }
    }
}

/// OTFS-CIM payload size of one frame: N·M·(log2 Mq + 2·log2 N_C).
pub fn bits_per_frame(cfg: &FrameConfig) -> usize {
    cfg.grid_size() * cfg.cim_bits_per_cell()
}

/// Bits per channel use (one N×M frame) of `system`.
///
/// OTFS-CIM carries N·M·(log2 Mq + 2 log2 N_C), OTFS carries N·M·log2 Mq and
/// OTFS-SM carries N·M·log2(Mq·N_T).
pub fn spectral_efficiency(system: System, cfg: &FrameConfig) -> Result<usize, ConfigError> {
    if system == System::OtfsSm && !cfg.tx_antennas.is_power_of_two() {
        return Err(ConfigError::TxAntennasNotPowerOfTwo(cfg.tx_antennas));
    }
    if !cfg.qam_order.is_power_of_two() || cfg.qam_order < 4 {
        return Err(ConfigError::QamOrderNotPowerOfTwo(cfg.qam_order));
    }
    if system == System::OtfsCim && !cfg.num_codes.is_power_of_two() {
        return Err(ConfigError::CodesNotPowerOfTwo(cfg.num_codes));
    }
    Ok(cfg.grid_size() * cfg.bits_per_cell(system))
}
