//! Error type shared across the crate.

/// Errors reported by model construction, solvers, samplers, and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inputs with incompatible shapes (vector lengths, matrix dims).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A parameter outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A covariance matrix that fails validation on load.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Problem size beyond an enumeration cap.
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    /// A factorization that failed even at the maximum jitter level.
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    /// Malformed input text (CSV/JSON covariance, experiment spec).
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
