use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{SweepPoint, TrainReport};
use crate::error::Result;

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub value: f64,
    pub delta_hat_surrogate: f64,
    pub delta_hat_hard: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub c_di_surrogate: f64,
    pub c_di_hard: f64,
    pub c_dp_hard: f64,
    pub test_delta_hat_hard: f64,
    pub test_c_di_hard: f64,
}

impl SummaryRow {
    fn new(value: f64, r: &TrainReport) -> Self {
        Self {
            value,
            delta_hat_surrogate: r.train_fairness.delta_hat_surrogate,
            delta_hat_hard: r.train_fairness.delta_hat_hard,
            train_accuracy: r.train_accuracy.overall,
            test_accuracy: r.test_accuracy.overall,
            c_di_surrogate: r.train_fairness.c_di_surrogate,
            c_di_hard: r.train_fairness.c_di_hard,
            c_dp_hard: r.train_fairness.c_dp_hard,
            test_delta_hat_hard: r.test_fairness.delta_hat_hard,
            test_c_di_hard: r.test_fairness.c_di_hard,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct FailureRow<'a> {
    value: f64,
    error: &'a str,
}

/// `summary.csv` with one row per successful run and `failures.csv` listing the rest.
pub fn write_summary(points: &[SweepPoint], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut ok = csv::Writer::from_path(dir.join("summary.csv"))?;
    let mut bad = csv::Writer::from_path(dir.join("failures.csv"))?;
    for p in points {
        match (&p.report, &p.error) {
            (Some(r), _) => ok.serialize(SummaryRow::new(p.value, r))?,
            (None, Some(e)) => bad.serialize(FailureRow {
                value: p.value,
                error: e,
            })?,
            (None, None) => {}
        }
    }
    if points.iter().all(|p| p.report.is_none()) {
        ok.write_record(SUMMARY_HEADER)?;
    }
    if points.iter().all(|p| p.report.is_some() || p.error.is_none()) {
        bad.write_record(["value", "error"])?;
    }
    ok.flush()?;
    bad.flush()?;
    Ok(())
}

const SUMMARY_HEADER: [&str; 10] = [
    "value",
    "delta_hat_surrogate",
    "delta_hat_hard",
    "train_accuracy",
    "test_accuracy",
    "c_di_surrogate",
    "c_di_hard",
    "c_dp_hard",
    "test_delta_hat_hard",
    "test_c_di_hard",
];

/// A threshold with the run trained at it.
pub type PlotRow<'a> = (f64, &'a TrainReport);

/// Writes the plot source tables into `dir` and returns their paths:
///
/// * `delta_tracking.csv`: `delta, delta_hat_surrogate, delta_hat_hard, test_delta_hat_hard`
/// * `accuracy.csv`: `threshold, train, test, train_group0, train_group1`
/// * `violation.csv`: `threshold, c_di_surrogate, c_di_hard, c_dp_surrogate, c_dp_hard`
///
/// Rows follow the input order; an empty input gives header-only files.
pub fn emit_plot_data(rows: &[PlotRow<'_>], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let tables: [(&str, [&str; 5], fn(f64, &TrainReport) -> [f64; 5]); 3] = [
        (
            "delta_tracking.csv",
            [
                "delta",
                "delta_hat_surrogate",
                "delta_hat_hard",
                "test_delta_hat_hard",
                "c_di_hard",
            ],
            |t, r| {
                [
                    t,
                    r.train_fairness.delta_hat_surrogate,
                    r.train_fairness.delta_hat_hard,
                    r.test_fairness.delta_hat_hard,
                    r.train_fairness.c_di_hard,
                ]
            },
        ),
        (
            "accuracy.csv",
            ["threshold", "train", "test", "train_group0", "train_group1"],
            |t, r| {
                [
                    t,
                    r.train_accuracy.overall,
                    r.test_accuracy.overall,
                    r.train_accuracy.group0,
                    r.train_accuracy.group1,
                ]
            },
        ),
        (
            "violation.csv",
            [
                "threshold",
                "c_di_surrogate",
                "c_di_hard",
                "c_dp_surrogate",
                "c_dp_hard",
            ],
            |t, r| {
                [
                    t,
                    r.train_fairness.c_di_surrogate,
                    r.train_fairness.c_di_hard,
                    r.train_fairness.c_dp_surrogate,
                    r.train_fairness.c_dp_hard,
                ]
            },
        ),
    ];
    let mut paths = Vec::new();
    for (name, header, row) in tables {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for &(t, r) in rows {
            w.write_record(row(t, r).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}
