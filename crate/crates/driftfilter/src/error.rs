//! Error type shared by all modules.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible matrix or vector shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix that must be positive semidefinite is not.
    #[error("not positive semidefinite: {0}")]
    NotPsd(String),

    /// A matrix that must be positive definite is not.
    #[error("not positive definite: {0}")]
    NotPd(String),

    /// Numerical failure: integrator blow-up, non-convergence, singularity.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Invalid experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Output I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Configuration (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
