use std::io;

use thiserror::Error;

/// Errors produced anywhere in the detection stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("Cholesky decomposition failed at pivot {pivot} (value {value:.3e}); matrix is not positive definite")]
    Decomposition { pivot: usize, value: f64 },

    #[error("singular covariance estimate from {samples} samples in dimension {dim} (failing pivot {pivot}); use more secondary data")]
    SingularEstimate {
        samples: usize,
        dim: usize,
        pivot: usize,
    },

    #[error("statistic undefined: {0}")]
    UndefinedStatistic(String),

    #[error("statistic not a finite nonnegative real: {0}")]
    InvalidStatistic(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient trials: {have} given, at least {need} required")]
    InsufficientTrials { have: usize, need: usize },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, actual })
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
