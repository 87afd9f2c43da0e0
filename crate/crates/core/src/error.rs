use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the supported domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature or iterative procedure failed to reach its tolerance.
    #[error("{what}: tolerance {requested:e} not reached (achieved {achieved:e})")]
    Numerical {
        what: String,
        requested: f64,
        achieved: f64,
    },

    /// Sampling or harmonic resolution is too coarse for the requested quantity.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// The truncated Fock space cannot represent the state to the required accuracy.
    #[error("truncation error: discarded weight {weight:e} exceeds {threshold:e}")]
    Truncation { weight: f64, threshold: f64 },

    /// Invalid configuration of a solver (step budget, dimensions, ...).
    #[error("parameter error: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
