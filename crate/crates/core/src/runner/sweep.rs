use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{prepare_data, run_on, ConstraintSpec, ExperimentConfig, Mode, TrainReport};
use crate::data::Dataset;
use crate::error::{FairError, Result};
use crate::fairness::ConstraintKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Threshold of the disparate- and equal-impact constraints.
    Delta,
    /// Half-width of the demographic-parity band.
    Epsilon,
    Lambda,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Delta => "delta",
            Self::Epsilon => "epsilon",
            Self::Lambda => "lambda",
        })
    }
}

impl FromStr for SweepParam {
    type Err = FairError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(Self::Delta),
            "epsilon" => Ok(Self::Epsilon),
            "lambda" => Ok(Self::Lambda),
            other => Err(FairError::invalid(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub report: Option<TrainReport>,
    pub error: Option<String>,
}

/// The base config with one grid value substituted.
pub fn apply_value(base: &ExperimentConfig, param: SweepParam, value: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    cfg.name = format!("{}-{param}-{value}", base.name);
    let set_threshold = |cfg: &mut ExperimentConfig, kinds: &[ConstraintKind], default: ConstraintKind| {
        let mut hit = false;
        for c in cfg.constraints.iter_mut().filter(|c| kinds.contains(&c.kind)) {
            c.threshold = value;
            hit = true;
        }
        if !hit {
            cfg.constraints.push(ConstraintSpec {
                kind: default,
                threshold: value,
            });
        }
    };
    match param {
        SweepParam::Delta => {
            set_threshold(
                &mut cfg,
                &[ConstraintKind::DisparateImpact, ConstraintKind::EqualImpact],
                ConstraintKind::DisparateImpact,
            );
            cfg.report_delta = Some(value);
        }
        SweepParam::Epsilon => set_threshold(
            &mut cfg,
            &[ConstraintKind::DemographicParityBand],
            ConstraintKind::DemographicParityBand,
        ),
        SweepParam::Lambda => {
            if cfg.mode == Mode::ConstraintOnly {
                cfg.mode = if cfg.constraints.is_empty() {
                    Mode::RegularizationOnly
                } else {
                    Mode::Both
                };
            }
            cfg.lambda = Some(value);
        }
    }
    if let Some(dir) = &base.output_dir {
        cfg.output_dir = Some(dir.join(format!("{param}_{value}")));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs every grid value on shared prepared data with up to `workers`
/// concurrent runs. Failed runs are recorded and the sweep continues.
pub fn run_sweep_on(
    base: &ExperimentConfig,
    param: SweepParam,
    grid: &[f64],
    workers: usize,
    train: &Dataset,
    test: &Dataset,
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(FairError::invalid("sweep grid is empty"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| FairError::invalid(e.to_string()))?;
    let points = pool.install(|| {
        grid.par_iter()
            .map(|&value| {
                let result = apply_value(base, param, value).and_then(|cfg| run_on(&cfg, train, test));
                match result {
                    Ok(out) => SweepPoint {
                        value,
                        report: Some(out.report),
                        error: None,
                    },
                    Err(e) => {
                        warn!("{param} = {value} failed: {e}");
                        SweepPoint {
                            value,
                            report: None,
                            error: Some(e.to_string()),
                        }
                    }
                }
            })
            .collect()
    });
    Ok(points)
}

pub fn run_sweep(base: &ExperimentConfig, param: SweepParam, grid: &[f64], workers: usize) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(FairError::invalid("sweep grid is empty"));
    }
    let (train, test) = prepare_data(&base.dataset)?;
    run_sweep_on(base, param, grid, workers, &train, &test)
}

/// Disparate- and equal-impact constraints together at threshold `delta`.
pub fn run_multi_constraint(
    base: &ExperimentConfig,
    delta: f64,
    train: &Dataset,
    test: &Dataset,
) -> Result<TrainReport> {
    let mut cfg = base.clone();
    cfg.constraints = vec![
        ConstraintSpec {
            kind: ConstraintKind::DisparateImpact,
            threshold: delta,
        },
        ConstraintSpec {
            kind: ConstraintKind::EqualImpact,
            threshold: delta,
        },
    ];
    cfg.report_delta = Some(delta);
    Ok(run_on(&cfg, train, test)?.report)
}
