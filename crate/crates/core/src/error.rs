//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree {requested} exceeds cap {cap}")]
    DegreeCap { requested: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("marginal violation at j={j}: expected {expected}, got {actual}")]
    MarginalViolation { j: usize, expected: f64, actual: f64 },

    #[error("not a probability measure: gamma[0][0] = {0} (pass normalize to rescale)")]
    NotProbability(f64),

    #[error("missing moment entries: {0}")]
    MissingMoments(String),

    #[error("insufficient moments: {0}")]
    InsufficientMoments(String),

    #[error("singular Hankel minor at index {0}")]
    SingularHankel(usize),

    #[error("ill-conditioned basis: {0}")]
    IllConditioned(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
