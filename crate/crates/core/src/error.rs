use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the SDA pipeline.
#[derive(Debug, Error)]
pub enum SdaError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("unparseable cell at row {row}, column '{column}': {value:?}")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("missing outcome column '{0}'")]
    MissingOutcomeColumn(String),

    #[error("survival outcome needs both a time and an event column")]
    IncompleteSurvivalSpec,

    #[error("event indicator not in {{0,1}} at row {row}: {value}")]
    BadEventIndicator { row: usize, value: String },

    #[error("negative survival time at row {row}: {value}")]
    NegativeSurvivalTime { row: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset is already centered")]
    AlreadyCentered,

    #[error("column {0} is constant; correlation undefined")]
    ConstantColumn(usize),

    #[error("no variance signal: every slice has a degenerate variance estimate")]
    NoVarianceSignal,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("coordinate descent did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SdaError>;

impl SdaError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SdaError::InvalidArgument(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        SdaError::DimensionMismatch(msg.into())
    }

    /// True for errors caused by the content of the input data rather than
    /// by the caller's configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            SdaError::Io { .. }
                | SdaError::Csv(_)
                | SdaError::BadCell { .. }
                | SdaError::MissingOutcomeColumn(_)
                | SdaError::BadEventIndicator { .. }
                | SdaError::NegativeSurvivalTime { .. }
                | SdaError::NonFinite(_)
                | SdaError::ConstantColumn(_)
                | SdaError::NoVarianceSignal
                | SdaError::NotPositiveDefinite
                | SdaError::DimensionMismatch(_)
        )
    }
}
