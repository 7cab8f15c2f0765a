use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability {value}: {reason}")]
    InvalidProbability { value: f64, reason: &'static str },

    #[error("not stochastic: {0}")]
    NotStochastic(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("enumeration cap exceeded: {what} needs {needed} entries, limit is {limit}")]
    CapExceeded {
        what: String,
        needed: u128,
        limit: u64,
    },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable sets overlap on `{0}`")]
    OverlappingVariables(String),

    #[error("capacity iteration did not converge after {iterations} iterations; capacity in [{lower}, {upper}]")]
    NoConvergence {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed {what}: {message}")]
    Format { what: String, message: String },

    #[error("internal consistency violated: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
