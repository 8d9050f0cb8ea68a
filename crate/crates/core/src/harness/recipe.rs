//! Multi-curve experiment descriptions stored as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{run_sweep, with_suffix, RunOptions, SweepResult, SweepSpec, DEFAULT_MIN_ERRORS};
use crate::config::{FrameConfig, System, ValidationPolicy};
use crate::error::{Error, Result};

/// One curve of a recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeCurve {
    /// Used in output file names; letters, digits, `-` and `_` only.
    pub label: String,
    pub system: System,
    pub config: FrameConfig,
}

/// A set of curves sharing one SNR grid and Monte Carlo budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    pub name: String,
    pub snr_db: Vec<f64>,
    pub max_frames: u64,
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    pub seed: u64,
    #[serde(default)]
    pub allow_cross_qam: bool,
    pub curves: Vec<RecipeCurve>,
}

fn default_min_errors() -> u64 {
    DEFAULT_MIN_ERRORS
}

impl Recipe {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let recipe: Recipe = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        recipe.validate()?;
        Ok(recipe)
    }

    pub fn validate(&self) -> Result<()> {
        if self.curves.is_empty() {
            return Err(Error::Sweep(format!("recipe {} has no curves", self.name)));
        }
        for (i, c) in self.curves.iter().enumerate() {
            let ok = !c.label.is_empty()
                && c.label
                    .chars()
                    .all(|ch| ch.is_ascii_alphanumeric() || ch == '-' || ch == '_');
            if !ok {
                return Err(Error::Sweep(format!(
                    "curve label {:?} is not file-name safe",
                    c.label
                )));
            }
            if self.curves[..i].iter().any(|o| o.label == c.label) {
                return Err(Error::Sweep(format!("duplicate curve label {:?}", c.label)));
            }
        }
        self.specs().iter().try_for_each(SweepSpec::validate)
    }

    /// One sweep spec per curve.
    pub fn specs(&self) -> Vec<SweepSpec> {
        self.curves
            .iter()
            .map(|c| SweepSpec {
                system: c.system,
                cfg: c.config.clone(),
                snr_db_list: self.snr_db.clone(),
                max_frames: self.max_frames,
                min_bit_errors: self.min_errors,
                seed: self.seed,
                policy: ValidationPolicy {
                    allow_cross_qam: self.allow_cross_qam,
                },
            })
            .collect()
    }
}

/// Runs every curve; with a prefix, writes `<prefix>-<label>.csv`,
/// `.json` and `-metrics.csv` per curve.
pub fn run_recipe(
    recipe: &Recipe,
    prefix: Option<&Path>,
    opts: RunOptions,
) -> Result<Vec<(String, SweepResult)>> {
    recipe.validate()?;
    recipe
        .curves
        .iter()
        .zip(recipe.specs())
        .map(|(curve, spec)| {
            let result = run_sweep(&spec, opts)?;
            if let Some(p) = prefix {
                result.write(&with_suffix(p, &format!("-{}", curve.label)))?;
            }
            Ok((curve.label.clone(), result))
        })
        .collect()
}
