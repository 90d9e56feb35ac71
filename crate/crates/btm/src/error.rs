//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A magnitude cannot be represented on the linear scale.
    #[error("overflow converting log-magnitude {ln_value} to linear scale")]
    Overflow { ln_value: f64 },

    /// A scan hit its position cap before finding what it was looking for.
    #[error("not found within the first {cap} positions: {what}")]
    NotFound { what: String, cap: u64 },

    /// A finite (planted) landscape ended before the construction did.
    #[error("landscape too short: needed position {needed}, reached {reached}")]
    InsufficientLandscape { needed: u64, reached: u64 },

    /// The dynamic range of a trap segment exceeds the float exponent budget.
    #[error(
        "trap dynamic range too wide after rescaling: ln sigma spans [{ln_min}, {ln_max}], \
         budget +/-{budget}"
    )]
    DynamicRange { ln_min: f64, ln_max: f64, budget: f64 },

    /// A numerical quality gate failed (residuals, negative probabilities, ...).
    #[error("numerical quality failure: {0}")]
    NumericalQuality(String),

    /// An event-driven simulation exceeded its step budget.
    #[error("step budget of {budget} exceeded after reaching time {time_reached}")]
    StepBudget { budget: u64, time_reached: f64 },

    /// Invalid experiment configuration or CLI usage.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Filesystem problems while persisting results.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
