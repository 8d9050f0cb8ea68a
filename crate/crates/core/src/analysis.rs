//! Closed-form metrics: throughput and energy saving.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{spectral_efficiency, FrameConfig, System};
use crate::error::{AnalysisError, Error};

/// One value of a metric curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub system: System,
    pub snr_db: f64,
    pub value: f64,
}

/// A row of the metric table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub system: System,
    pub snr_db: f64,
    pub ber: f64,
    pub throughput_bps: f64,
    pub eta_bpcu: f64,
}

impl MetricRow {
    pub fn throughput_point(&self) -> MetricPoint {
        MetricPoint {
            system: self.system,
            snr_db: self.snr_db,
            value: self.throughput_bps,
        }
    }
}

/// Throughput `ζ = (1 − ber)·η / T_s` in bits per second.
pub fn throughput(ber: f64, symbol_duration_s: f64, eta_bpcu: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&ber) {
        return Err(AnalysisError::BerOutOfRange(ber));
    }
    if !(symbol_duration_s.is_finite() && symbol_duration_s > 0.0) {
        return Err(AnalysisError::NonPositiveDuration(symbol_duration_s));
    }
    Ok((1.0 - ber) * eta_bpcu / symbol_duration_s)
}

/// Energy saved per OTFS-CIM frame relative to a benchmark carrying
/// `eta_benchmark` bits in the same resources, in percent.
pub fn energy_saving(eta_benchmark: f64, eta_cim: f64) -> Result<f64, AnalysisError> {
    if !(eta_benchmark > 0.0 && eta_cim > 0.0) {
        return Err(AnalysisError::NonPositiveEfficiency {
            benchmark: eta_benchmark,
            cim: eta_cim,
        });
    }
    if eta_benchmark > eta_cim {
        return Err(AnalysisError::NegativeSaving {
            benchmark: eta_benchmark,
            cim: eta_cim,
        });
    }
    Ok((1.0 - eta_benchmark / eta_cim) * 100.0)
}

/// Spectral efficiencies of the three systems on one configuration and the
/// resulting energy savings of OTFS-CIM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyComparison {
    pub eta_cim: usize,
    pub eta_otfs: usize,
    pub eta_sm: usize,
    pub saving_vs_otfs: f64,
    pub saving_vs_sm: f64,
}

pub fn compare_energy(cfg: &FrameConfig) -> Result<EnergyComparison, Error> {
    let eta = |s| spectral_efficiency(s, cfg);
    let (eta_cim, eta_otfs, eta_sm) = (
        eta(System::OtfsCim)?,
        eta(System::Otfs)?,
        eta(System::OtfsSm)?,
    );
    Ok(EnergyComparison {
        eta_cim,
        eta_otfs,
        eta_sm,
        saving_vs_otfs: energy_saving(eta_otfs as f64, eta_cim as f64)?,
        saving_vs_sm: energy_saving(eta_sm as f64, eta_cim as f64)?,
    })
}

/// Throughput at `ber` for `system` under `cfg`; T_s = L/Δf is shared by
/// all systems.
pub fn system_throughput(system: System, cfg: &FrameConfig, ber: f64) -> Result<f64, Error> {
    let eta = spectral_efficiency(system, cfg)?;
    Ok(throughput(ber, cfg.timing().symbol_duration_s, eta as f64)?)
}

/// Writes rows as CSV with header `system,snr_db,ber,throughput_bps,eta_bpcu`.
pub fn write_metric_table(path: &Path, rows: &[MetricRow]) -> Result<(), Error> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(n: usize, mq: usize, n_t: usize, n_c: usize) -> FrameConfig {
        FrameConfig {
            doppler_bins: n,
            delay_bins: n,
            qam_order: mq,
            tx_antennas: n_t,
            num_codes: n_c,
            code_length: n_c.max(8),
            ..FrameConfig::default()
        }
    }

    #[test]
    fn throughput_limits() {
        assert_eq!(throughput(0.0, 1.0, 24.0).unwrap(), 24.0);
        assert_eq!(throughput(1.0, 1.0, 24.0).unwrap(), 0.0);
        assert!(throughput(1.5, 1.0, 24.0).is_err());
        assert!(throughput(-0.1, 1.0, 24.0).is_err());
        assert!(throughput(f64::NAN, 1.0, 24.0).is_err());
        assert!(throughput(0.1, 0.0, 24.0).is_err());
    }

    #[test]
    fn throughput_of_24_bpcu_config() {
        let c = cfg(2, 4, 1, 4);
        let t_s = 8.0 / 15.0e3;
        for ber in [0.1, 0.01] {
            let got = system_throughput(System::OtfsCim, &c, ber).unwrap();
            let want = 24.0 * (1.0 - ber) * 15.0e3 / 8.0;
            assert!((got - want).abs() < 1e-9 * want);
            assert!((got * t_s - 24.0 * (1.0 - ber)).abs() < 1e-9);
        }
        assert!((system_throughput(System::OtfsCim, &c, 0.1).unwrap() - 40_500.0).abs() < 1e-6);
        assert!((system_throughput(System::OtfsCim, &c, 0.01).unwrap() - 44_550.0).abs() < 1e-6);
    }

    #[test]
    fn saving_examples() {
        let a = compare_energy(&cfg(2, 4, 4, 8)).unwrap();
        assert_eq!((a.eta_cim, a.eta_otfs, a.eta_sm), (32, 8, 16));
        assert_eq!(a.saving_vs_otfs, 75.0);
        assert_eq!(a.saving_vs_sm, 50.0);

        let b = compare_energy(&cfg(4, 8, 8, 4)).unwrap();
        assert_eq!((b.eta_cim, b.eta_otfs, b.eta_sm), (112, 48, 96));
        assert!((b.saving_vs_otfs - 57.142_857).abs() < 1e-5);
        assert!((b.saving_vs_sm - 14.285_714).abs() < 1e-5);

        assert_eq!(energy_saving(24.0, 24.0).unwrap(), 0.0);
        assert!(energy_saving(32.0, 24.0).is_err());
        assert!(energy_saving(0.0, 24.0).is_err());
    }

    proptest! {
        #[test]
        fn throughput_monotone_and_linear(
            a in 0.0f64..=1.0, b in 0.0f64..=1.0, eta in 1.0f64..512.0, k in 0.1f64..10.0,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(throughput(lo, 1e-3, eta).unwrap() >= throughput(hi, 1e-3, eta).unwrap());
            let base = throughput(a, 1e-3, eta).unwrap();
            let scaled = throughput(a, 1e-3, k * eta).unwrap();
            prop_assert!((scaled - k * base).abs() <= 1e-9 * scaled.abs().max(1.0));
        }

        #[test]
        fn saving_scale_invariant(bench in 1.0f64..100.0, extra in 0.0f64..100.0, k in 0.01f64..100.0) {
            let cim = bench + extra;
            let s1 = energy_saving(bench, cim).unwrap();
            let s2 = energy_saving(k * bench, k * cim).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-9);
            prop_assert!((0.0..100.0).contains(&s1));
        }
    }

    #[test]
    fn metric_table_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let rows = [MetricRow {
            system: System::OtfsSm,
            snr_db: 5.0,
            ber: 0.25,
            throughput_bps: 10.0,
            eta_bpcu: 24.0,
        }];
        write_metric_table(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "system,snr_db,ber,throughput_bps,eta_bpcu\notfs-sm,5.0,0.25,10.0,24.0\n"
        );
        assert_eq!(rows[0].throughput_point().value, 10.0);
    }
}
