use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An argument hits a branch point or lies outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The reflection coefficient denominator a2 - a1*lambda(s) vanishes.
    #[error("reflection coefficient has a pole at s = {s}")]
    Pole { s: Complex64 },

    /// The operation is not defined for the given boundary class or input.
    #[error("usage error: {0}")]
    Usage(String),

    /// A quadrature or transform did not reach the requested tolerance.
    #[error("accuracy target {requested:e} not met (achieved {achieved:e}): {context}")]
    Accuracy {
        requested: f64,
        achieved: f64,
        context: String,
    },

    /// Solver or contour configuration violates a stability/placement constraint.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A time integration produced non-finite values or lost positivity.
    #[error("solution diverged at t = {t}: {reason}")]
    Divergence { t: f64, reason: String },

    /// A verification could not reach a verdict.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }
}
