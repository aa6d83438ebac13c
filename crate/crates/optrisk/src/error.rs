//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the risk engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value is outside its mathematical domain.
    #[error("domain error in `{field}`: {message}")]
    Domain { field: &'static str, message: String },

    /// Not enough data to estimate a quantity.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Interpolation could not be performed (missing bracket, degenerate knots).
    #[error("interpolation error: {0}")]
    Interpolation(String),

    /// Constraint system construction or projection failed.
    #[error("constraint error: {0}")]
    Constraint(String),

    /// Linear program could not be solved.
    #[error("linear program error: {0}")]
    Lp(String),

    /// Arbitrage repair failed (infeasible system).
    #[error("repair error: {0}")]
    Repair(String),

    /// Factor decomposition failed.
    #[error("decomposition error: {0}")]
    Decomposition(String),

    /// A reconstruction metric is undefined for the given inputs.
    #[error("metric error: {0}")]
    Metric(String),

    /// Model training diverged or produced non-finite values.
    #[error("training error: {0}")]
    Training(String),

    /// Numerical routine failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Model calibration failed; the message carries the best objective found.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// A contract could not be revalued under a scenario.
    #[error("revaluation error for {contract}: {message}")]
    Revaluation { contract: String, message: String },

    /// Residual computation failed at a date.
    #[error("residual error: {0}")]
    Residual(String),

    /// Portfolio catalog construction failed.
    #[error("catalog error: {0}")]
    Catalog(String),

    /// An operation was invoked with arguments it does not support.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed input file.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// Configuration file problem.
    #[error("config error: {0}")]
    Config(String),

    /// A pipeline stage dependency is missing.
    #[error("missing artifact `{artifact}`: run `{stage}` first")]
    MissingArtifact { artifact: String, stage: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(field: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            field,
            message: message.into(),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
