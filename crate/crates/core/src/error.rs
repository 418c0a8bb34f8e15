use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{} is empty", .path.display())]
    EmptyFile { path: PathBuf },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("column `{0}` not found in csv header")]
    MissingColumn(String),

    #[error("missing value in column `{column}` at data row {row}")]
    MissingValue { column: String, row: usize },

    #[error("non-numeric value `{value}` in column `{column}` at data row {row}")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },

    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular regressor matrix (collinear or constant regressor involving `{variable}`)")]
    Singular { variable: String },

    #[error("matrix is not positive definite (leading minor {index} <= 0)")]
    NotPositiveDefinite { index: usize },

    #[error("zero residual variance for `{0}`")]
    ZeroVariance(String),

    #[error("bootstrap aborted: {failed} of {reps} replicates failed")]
    BootstrapFailed { failed: usize, reps: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("timed task failed after {} completed reps: {message}", .completed.len())]
    TaskFailed {
        completed: Vec<f64>,
        message: String,
    },
}

impl Error {
    /// True for errors that come from the numbers rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::ZeroVariance(_)
                | Error::BootstrapFailed { .. }
                | Error::Numerical(_)
        )
    }
}
