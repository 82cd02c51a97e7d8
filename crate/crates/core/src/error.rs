use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} items, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A guard that refuses work instead of approximating (e.g. brute force on too many items).
    #[error("guard violation: {0}")]
    Guard(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
