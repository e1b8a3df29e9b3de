//! Experiment orchestration: data preparation, single runs, sweeps,
//! multi-constraint runs, and report/CSV emission.

mod config;
mod plot;
mod sweep;

pub use config::{
    ConstraintSpec, DatasetConfig, ExperimentConfig, Mode, ModelSpec, ADULT_DESK_SUBSAMPLE, DEFAULT_REPORT_DELTA,
};
pub use plot::{emit_plot_data, write_summary, PlotRow, SummaryRow};
pub use sweep::{apply_value, run_multi_constraint, run_sweep, run_sweep_on, SweepParam, SweepPoint};

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{load_csv, Dataset, Schema, Standardizer};
use crate::error::Result;
use crate::fairness::{fairness_report, FairnessReport};
use crate::model::ModelParams;
use crate::sqp::{train, TraceRecord};

/// Loads, splits, subsamples, and standardizes a dataset; returns `(train, test)`.
pub fn prepare_data(cfg: &DatasetConfig) -> Result<(Dataset, Dataset)> {
    let schema = Schema::from_json_file(&cfg.schema)?;
    let full = load_csv(&cfg.path, &schema)?;
    let (mut train, mut test) = full.split(cfg.train_ratio, cfg.split_seed)?;
    if let Some(n) = cfg.train_subsample {
        train = train.subsample(n, cfg.split_seed)?;
    }
    let scaler = Standardizer::fit(&train);
    scaler.apply(&mut train);
    scaler.apply(&mut test);
    Ok((train, test))
}

/// Percent of correct hard predictions, overall and per sensitive group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub overall: f64,
    pub group0: f64,
    pub group1: f64,
}

pub fn accuracy(params: &ModelParams, data: &Dataset, tau: f64) -> Result<Accuracy> {
    let out = params.forward_batch(data.features.view())?;
    let correct = |idx: &[usize]| {
        let hits = idx.iter().filter(|&&i| (out[i] > tau) == (data.labels[i] == 1)).count();
        100.0 * hits as f64 / idx.len() as f64
    };
    Ok(Accuracy {
        overall: correct(&data.all_indices()),
        group0: correct(data.group(0)),
        group1: correct(data.group(1)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub train_size: usize,
    pub test_size: usize,
    pub train_accuracy: Accuracy,
    pub test_accuracy: Accuracy,
    pub train_fairness: FairnessReport,
    pub test_fairness: FairnessReport,
    pub iterations: usize,
    pub final_merit_param: f64,
    pub final_lr: f64,
    pub epoch_trace: Vec<TraceRecord>,
    pub weight_checksum: String,
    /// Zero in deterministic mode so the whole report is reproducible.
    pub wall_clock_seconds: f64,
}

impl TrainReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Full result of a run: the report and the trained weights.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: TrainReport,
    pub params: ModelParams,
}

/// Trains on prepared data. With an output directory, writes `trace.jsonl`
/// while training and `report.json` plus `model.json` at the end.
pub fn run_on(cfg: &ExperimentConfig, train_set: &Dataset, test_set: &Dataset) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let constraints = cfg.constraint_set()?;
    let sqp = cfg.sqp_config();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = ModelParams::init(
        cfg.model.layer_sizes(train_set.width()),
        cfg.model.leaky_slope,
        &mut rng,
    )?;

    let mut trace: Option<BufWriter<File>> = match &cfg.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Some(BufWriter::new(File::create(dir.join("trace.jsonl"))?))
        }
        None => None,
    };
    let mut sink = |r: &TraceRecord| -> Result<()> {
        if let Some(w) = trace.as_mut() {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    };
    let outcome = train(init, train_set, &constraints, &sqp, &mut sink);
    if let Some(w) = trace.as_mut() {
        w.flush()?;
    }
    let outcome = outcome?;

    let delta = cfg.report_delta();
    let params = outcome.params;
    let report = TrainReport {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        train_size: train_set.len(),
        test_size: test_set.len(),
        train_accuracy: accuracy(&params, train_set, cfg.surrogate.tau)?,
        test_accuracy: accuracy(&params, test_set, cfg.surrogate.tau)?,
        train_fairness: fairness_report(train_set, &params, &cfg.surrogate, delta)?,
        test_fairness: fairness_report(test_set, &params, &cfg.surrogate, delta)?,
        iterations: outcome.state.iteration,
        final_merit_param: outcome.state.merit_param,
        final_lr: outcome.state.lr,
        epoch_trace: outcome.epoch_trace,
        weight_checksum: params.checksum(),
        wall_clock_seconds: if cfg.deterministic {
            0.0
        } else {
            start.elapsed().as_secs_f64()
        },
    };
    if let Some(dir) = &cfg.output_dir {
        fs::write(dir.join("report.json"), report.to_json()?)?;
        params.save(&dir.join("model.json"))?;
    }
    info!(
        "{}: train acc {:.2}%, delta_hat {:.4}, c_di {:.2e}",
        cfg.name, report.train_accuracy.overall, report.train_fairness.delta_hat_hard, report.train_fairness.c_di_hard
    );
    Ok(RunOutput { report, params })
}

pub fn run_single(cfg: &ExperimentConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let (train_set, test_set) = prepare_data(&cfg.dataset)?;
    Ok(run_on(cfg, &train_set, &test_set)?.report)
}

/// Writes `value` as pretty JSON to `path`, creating parent directories.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}
