use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FairError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FairError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("degenerate active set {active:?}: Schur complement condition estimate {condition:.3e}")]
    DegenerateActiveSet { active: Vec<usize>, condition: f64 },

    #[error("QP subproblem infeasible; row residuals (J d + r) of best candidate: {residuals:?}")]
    QpInfeasible { residuals: Vec<f64> },

    #[error("iterate diverged at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FairError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FairError::InvalidArgument(msg.into())
    }

    pub(crate) fn dataset(msg: impl Into<String>) -> Self {
        FairError::InvalidDataset(msg.into())
    }
}
