use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{BatchMode, DEFAULT_SPLIT_SEED, DEFAULT_TRAIN_RATIO};
use crate::error::{FairError, Result};
use crate::fairness::{ConstraintEntry, ConstraintKind, ConstraintSet};
use crate::model::DEFAULT_LEAKY_SLOPE;
use crate::sqp::{LrSchedule, QpMode, SqpConfig, DEFAULT_EPOCHS, DEFAULT_LR};
use crate::surrogate::SurrogateSpec;

/// Training subsample size used for Adult unless the full set is requested.
pub const ADULT_DESK_SUBSAMPLE: usize = 6_000;
/// Threshold used for the disparate-impact columns of a report when the run
/// has no ratio constraint of its own.
pub const DEFAULT_REPORT_DELTA: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ConstraintOnly,
    RegularizationOnly,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub name: String,
    pub path: PathBuf,
    pub schema: PathBuf,
    #[serde(default = "default_ratio")]
    pub train_ratio: f64,
    #[serde(default = "default_split_seed")]
    pub split_seed: u64,
    /// Keep only this many training rows (uniformly, seeded by the split seed).
    #[serde(default)]
    pub train_subsample: Option<usize>,
}

fn default_ratio() -> f64 {
    DEFAULT_TRAIN_RATIO
}

fn default_split_seed() -> u64 {
    DEFAULT_SPLIT_SEED
}

impl DatasetConfig {
    /// `<data_dir>/raw/<file>` and `<data_dir>/schemas/<name>.json` for the
    /// bundled datasets.
    pub fn builtin(name: &str, data_dir: &Path) -> Result<Self> {
        let (file, subsample) = match name {
            "adult" => ("adult.data", Some(ADULT_DESK_SUBSAMPLE)),
            "law" => ("law_school_clean.csv", None),
            other => {
                return Err(FairError::invalid(format!(
                    "unknown dataset `{other}`; use `adult`, `law`, or a config file"
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            path: data_dir.join("raw").join(file),
            schema: data_dir.join("schemas").join(format!("{name}.json")),
            train_ratio: DEFAULT_TRAIN_RATIO,
            split_seed: DEFAULT_SPLIT_SEED,
            train_subsample: subsample,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Hidden layer widths; empty for a linear model.
    pub hidden: Vec<usize>,
    #[serde(default = "default_slope")]
    pub leaky_slope: f64,
}

fn default_slope() -> f64 {
    DEFAULT_LEAKY_SLOPE
}

impl ModelSpec {
    pub fn layer_sizes(&self, input_width: usize) -> Vec<usize> {
        let mut sizes = vec![input_width];
        sizes.extend(&self.hidden);
        sizes.push(1);
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetConfig,
    pub model: ModelSpec,
    pub surrogate: SurrogateSpec,
    pub mode: Mode,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    /// `None` stands for lambda = infinity (no regularizer).
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub batch: BatchMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub qp_mode: QpMode,
    /// Threshold for the ratio columns of the fairness report.
    #[serde(default)]
    pub report_delta: Option<f64>,
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_epochs() -> usize {
    DEFAULT_EPOCHS
}

fn default_lr() -> f64 {
    DEFAULT_LR
}

impl ExperimentConfig {
    /// Defaults for a bundled dataset: linear model for Law, a 128-64 network
    /// for Adult, smoothed-step surrogate, no constraints.
    pub fn for_dataset(name: &str, data_dir: &Path) -> Result<Self> {
        let dataset = DatasetConfig::builtin(name, data_dir)?;
        let hidden = if name == "adult" { vec![128, 64] } else { Vec::new() };
        Ok(Self {
            name: name.to_string(),
            dataset,
            model: ModelSpec {
                hidden,
                leaky_slope: DEFAULT_LEAKY_SLOPE,
            },
            surrogate: SurrogateSpec::default(),
            mode: Mode::ConstraintOnly,
            constraints: Vec::new(),
            lambda: None,
            epochs: DEFAULT_EPOCHS,
            lr: DEFAULT_LR,
            batch: BatchMode::Full,
            seed: 0,
            qp_mode: QpMode::Cascade,
            report_delta: None,
            deterministic: false,
            output_dir: None,
        })
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_disparate_impact(mut self, delta: f64) -> Self {
        self.constraints = vec![ConstraintSpec {
            kind: ConstraintKind::DisparateImpact,
            threshold: delta,
        }];
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            Mode::ConstraintOnly if self.lambda.is_some() => {
                return Err(FairError::invalid("constraint-only runs take no lambda"))
            }
            Mode::RegularizationOnly if !self.constraints.is_empty() => {
                return Err(FairError::invalid("regularization-only runs take no constraints"))
            }
            Mode::RegularizationOnly | Mode::Both if self.lambda.is_none() => {
                return Err(FairError::invalid("regularized runs need a lambda"))
            }
            _ => {}
        }
        if let Some(d) = self.report_delta {
            if !(0.0..=1.0).contains(&d) {
                return Err(FairError::invalid(format!("report delta must lie in [0, 1], got {d}")));
            }
        }
        self.surrogate.validate()?;
        self.constraint_set()?;
        self.sqp_config().validate()
    }

    pub fn constraint_set(&self) -> Result<ConstraintSet> {
        let entries = self
            .constraints
            .iter()
            .map(|c| match c.kind {
                ConstraintKind::DisparateImpact => ConstraintEntry::disparate_impact(c.threshold, self.surrogate),
                ConstraintKind::EqualImpact => ConstraintEntry::equal_impact(c.threshold, self.surrogate),
                ConstraintKind::DemographicParityBand => {
                    ConstraintEntry::demographic_parity_band(c.threshold, self.surrogate)
                }
                ConstraintKind::CovarianceBand => ConstraintEntry::covariance_band(c.threshold),
            })
            .collect();
        ConstraintSet::new(entries)
    }

    pub fn sqp_config(&self) -> SqpConfig {
        SqpConfig {
            epochs: self.epochs,
            lr: self.lr,
            lambda: self.lambda,
            regularizer_surrogate: self.surrogate,
            qp_mode: self.qp_mode,
            batch: self.batch,
            seed: self.seed.wrapping_add(1),
            schedule: LrSchedule::default(),
            initial_merit_param: 1.0,
        }
    }

    /// Threshold used for reported disparate-impact rows.
    pub fn report_delta(&self) -> f64 {
        self.report_delta
            .or_else(|| {
                self.constraints
                    .iter()
                    .find(|c| matches!(c.kind, ConstraintKind::DisparateImpact | ConstraintKind::EqualImpact))
                    .map(|c| c.threshold)
            })
            .unwrap_or(DEFAULT_REPORT_DELTA)
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
