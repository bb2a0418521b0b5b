use thiserror::Error;

/// Errors produced anywhere in the spectral pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RabiError {
    #[error("invalid parameter {field} = {value}")]
    InvalidParameter { field: &'static str, value: f64 },

    #[error("G-function series did not converge within {n_max} terms")]
    NonConvergence { n_max: usize },

    #[error("coupling g = 0: the G-function recurrence is undefined")]
    ZeroCoupling,

    #[error("x = {x} is within the pole guard of baseline {nearest_pole}")]
    PoleProximity { x: f64, nearest_pole: i64 },

    #[error("invalid Fock truncation M = {0} (need M >= 2)")]
    InvalidTruncation(usize),

    #[error("eigensolver failed to converge at index {index}")]
    ConvergenceFailure { index: usize },

    #[error("oracle truncation would exceed M_cap = {cap}")]
    TruncationExceeded { cap: usize },

    #[error("degenerate case: {0}")]
    DegenerateCase(&'static str),

    #[error("interval coverage has a gap for parity {parity} at n = {missing}")]
    IncompleteCoverage { parity: &'static str, missing: i64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}, column {column} (byte offset {offset}): {message}")]
    Parse { line: usize, column: usize, offset: usize, message: String },
}

pub type Result<T> = std::result::Result<T, RabiError>;
