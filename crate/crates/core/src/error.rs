use thiserror::Error;

/// Errors raised by parameter validation, bound evaluation and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The honest fraction in the rigged model does not exceed one half.
    #[error("fault tolerance exceeded: p = {p} <= 1/2")]
    FaultToleranceExceeded { p: f64 },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("trial budget must be at least 1")]
    TrialBudget,
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
