use thiserror::Error;

/// Errors raised by the solvers, oracle, simulator and command-line runner.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain the model is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// The fixed-point iteration for K0 produced a non-positive iterate.
    #[error("K0 iteration diverged at step {step}: iterate {value} is not positive")]
    Divergence {
        step: usize,
        value: f64,
        trace: Vec<f64>,
    },

    /// A bracketing search failed to locate a sign change.
    #[error("no bracket found: {0}")]
    NoBracket(String),

    /// A strategy table violates an invariant required by the oracle.
    #[error("invalid strategy table: {0}")]
    Table(String),

    /// An oracle check exceeded its tolerance.
    #[error("verification failed: {0}")]
    Verification(String),

    /// The command-line configuration is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
