use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch in {field}: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("empty instance: u must have at least one coordinate")]
    EmptyInstance,

    #[error("point is not first-order stationary")]
    NotStationary,

    #[error("point is a global minimizer, not a spurious stationary point")]
    NotSpurious,

    #[error("invalid gamma configuration: {0}")]
    InvalidGammaConfig(String),

    #[error("dimension {n} too large for exhaustive scan (max {max})")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Two routes that must agree by theory disagreed. Always an implementation bug.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
