use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("failed to read {path}: {message}")]
    Input { path: PathBuf, message: String },

    #[error("failed to write {path}: {message}")]
    Output { path: PathBuf, message: String },

    #[error("catheter detection failed: {0}")]
    DetectionFailed(String),

    #[error("polynomial fit failed: {0}")]
    FitFailed(String),

    #[error("catheter tracking lost: best support {support} below {min_support}")]
    TrackingLost { support: usize, min_support: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
