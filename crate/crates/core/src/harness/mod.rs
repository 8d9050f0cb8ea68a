//! Monte Carlo BER engine.
//!
//! Frames run in fixed batches of [`BATCH_FRAMES`]; inside a batch they
//! execute in parallel and their integer counters are summed. The stopping
//! rule is evaluated only between batches, so the frames simulated (and
//! hence every output byte) are independent of the worker count.

pub mod recipe;
pub mod seed;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{system_throughput, write_metric_table, MetricRow};
use crate::benchmarks::{OtfsLink, SmLink};
use crate::config::{spectral_efficiency, FrameConfig, System, ValidationPolicy};
use crate::error::{Error, Result};
use crate::link::{CimLink, FrameLink, FrameOutcome};

pub use recipe::{run_recipe, Recipe, RecipeCurve};
pub use seed::{frame_rngs, point_seed, splitmix64};

/// Frames between two evaluations of the stopping rule.
pub const BATCH_FRAMES: u64 = 64;

/// Default bit-error target for early stopping.
pub const DEFAULT_MIN_ERRORS: u64 = 200;

/// One SNR sweep of one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub system: System,
    pub cfg: FrameConfig,
    pub snr_db_list: Vec<f64>,
    pub max_frames: u64,
    /// Stop a point once this many bit errors are seen; 0 disables the rule.
    #[serde(default = "default_min_errors")]
    pub min_bit_errors: u64,
    pub seed: u64,
    #[serde(default)]
    pub policy: ValidationPolicy,
}

fn default_min_errors() -> u64 {
    DEFAULT_MIN_ERRORS
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.max_frames == 0 {
            return Err(Error::Sweep("max_frames must be at least 1".into()));
        }
        if self.snr_db_list.is_empty() {
            return Err(Error::Sweep("SNR list is empty".into()));
        }
        if self.snr_db_list.iter().any(|s| s.is_nan()) {
            return Err(Error::Sweep("SNR list contains NaN".into()));
        }
        if self.snr_db_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Sweep("SNR list must be strictly increasing".into()));
        }
        self.cfg.validate_for(self.system, self.policy)?;
        Ok(())
    }

    pub fn eta_bpcu(&self) -> Result<usize> {
        Ok(spectral_efficiency(self.system, &self.cfg)?)
    }
}

/// Accumulated result of one SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub snr_db: f64,
    pub frames_run: u64,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci95_halfwidth: f64,
}

impl BerRecord {
    pub fn from_counts(snr_db: f64, frames_run: u64, bits_sent: u64, bit_errors: u64) -> Self {
        let ber = if bits_sent == 0 {
            0.0
        } else {
            bit_errors as f64 / bits_sent as f64
        };
        let ci95_halfwidth = if bits_sent == 0 {
            0.0
        } else {
            1.96 * (ber * (1.0 - ber) / bits_sent as f64).sqrt()
        };
        BerRecord {
            snr_db,
            frames_run,
            bits_sent,
            bit_errors,
            ber,
            ci95_halfwidth,
        }
    }

    pub fn ci_low(&self) -> f64 {
        self.ber - self.ci95_halfwidth
    }

    pub fn ci_high(&self) -> f64 {
        self.ber + self.ci95_halfwidth
    }

    /// True when this record's 95% interval lies entirely below `other`'s.
    pub fn clearly_below(&self, other: &BerRecord) -> bool {
        self.ci_high() < other.ci_low()
    }
}

/// Row of the per-sweep CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub system: System,
    pub snr_db: f64,
    pub frames: u64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci95: f64,
    pub throughput_bps: f64,
}

/// Records of a finished sweep with their derived metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub eta_bpcu: usize,
    pub records: Vec<BerRecord>,
    pub metrics: Vec<MetricRow>,
}

impl SweepResult {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.records
            .iter()
            .zip(&self.metrics)
            .map(|(r, m)| CsvRow {
                system: self.spec.system,
                snr_db: r.snr_db,
                frames: r.frames_run,
                bits: r.bits_sent,
                errors: r.bit_errors,
                ber: r.ber,
                ci95: r.ci95_halfwidth,
                throughput_bps: m.throughput_bps,
            })
            .collect()
    }

    /// Writes `<prefix>.csv`, `<prefix>.json` and `<prefix>-metrics.csv`.
    pub fn write(&self, prefix: &Path) -> Result<()> {
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.to_owned(),
                source,
            })?;
        }
        let csv_path = with_suffix(prefix, ".csv");
        let csv_err = |source| Error::Csv {
            path: csv_path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
        for row in self.csv_rows() {
            w.serialize(row).map_err(csv_err)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: csv_path.clone(),
            source,
        })?;

        let json_path = with_suffix(prefix, ".json");
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: json_path.clone(),
            source,
        })?;
        std::fs::write(&json_path, text + "\n").map_err(|source| Error::Io {
            path: json_path,
            source,
        })?;

        write_metric_table(&with_suffix(prefix, "-metrics.csv"), &self.metrics)
    }
}

pub(crate) fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Builds the transceiver for `system`.
pub fn make_link(system: System, cfg: &FrameConfig) -> Result<Box<dyn FrameLink>> {
    Ok(match system {
        System::OtfsCim => Box::new(CimLink::new(cfg)?),
        System::Otfs => Box::new(OtfsLink::new(cfg)?),
        System::OtfsSm => Box::new(SmLink::new(cfg)?),
    })
}

/// Runs frames of `link` at one SNR until `max_frames` frames or
/// `min_bit_errors` errors, checked at batch boundaries.
pub fn run_link_point(
    link: &dyn FrameLink,
    snr_db: f64,
    max_frames: u64,
    min_bit_errors: u64,
    master_seed: u64,
) -> Result<BerRecord> {
    let seed = point_seed(master_seed, snr_db);
    let mut total = FrameOutcome::default();
    let mut frames = 0;
    while frames < max_frames {
        let end = (frames + BATCH_FRAMES).min(max_frames);
        let batch = (frames..end)
            .into_par_iter()
            .map(|f| link.simulate_frame(&mut frame_rngs(seed, f), snr_db))
            .collect::<Result<Vec<_>>>()?;
        for o in batch {
            total.bits += o.bits;
            total.errors += o.errors;
        }
        frames = end;
        if min_bit_errors > 0 && total.errors >= min_bit_errors {
            break;
        }
    }
    Ok(BerRecord::from_counts(
        snr_db,
        frames,
        total.bits,
        total.errors,
    ))
}

/// One SNR point of a validated spec, on the current rayon pool.
pub fn run_point(spec: &SweepSpec, snr_db: f64) -> Result<BerRecord> {
    spec.validate()?;
    let link = make_link(spec.system, &spec.cfg)?;
    run_link_point(
        link.as_ref(),
        snr_db,
        spec.max_frames,
        spec.min_bit_errors,
        spec.seed,
    )
}

/// Execution options that do not affect results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

pub(crate) fn with_pool<T: Send>(opts: RunOptions, f: impl FnOnce() -> T + Send) -> Result<T> {
    match opts.threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Sweep(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs every SNR point of `spec` and attaches throughput.
pub fn run_sweep(spec: &SweepSpec, opts: RunOptions) -> Result<SweepResult> {
    spec.validate()?;
    let eta_bpcu = spec.eta_bpcu()?;
    let link = make_link(spec.system, &spec.cfg)?;
    let records = with_pool(opts, || {
        spec.snr_db_list
            .iter()
            .map(|&snr| {
                run_link_point(
                    link.as_ref(),
                    snr,
                    spec.max_frames,
                    spec.min_bit_errors,
                    spec.seed,
                )
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let metrics = records
        .iter()
        .map(|r| {
            Ok(MetricRow {
                system: spec.system,
                snr_db: r.snr_db,
                ber: r.ber,
                throughput_bps: system_throughput(spec.system, &spec.cfg, r.ber)?,
                eta_bpcu: eta_bpcu as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        spec: spec.clone(),
        eta_bpcu,
        records,
        metrics,
    })
}

/// Parses `start:step:stop` (inclusive) or a single value.
pub fn parse_snr_range(text: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Sweep(format!("SNR range {text:?}: {why}"));
    let parts = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad("not a number")))
        .collect::<Result<Vec<_>>>()?;
    match parts[..] {
        [single] if single.is_finite() => Ok(vec![single]),
        [start, step, stop] if start.is_finite() && stop.is_finite() => {
            if !(step.is_finite() && step > 0.0) {
                return Err(bad("step must be positive"));
            }
            if stop < start {
                return Err(bad("stop is below start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad("expected start:step:stop")),
    }
}
