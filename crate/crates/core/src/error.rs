//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("combinatorial budget exceeded: {count} partitions > {budget} (try local-search)")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("witness rejected: spectral estimate {estimate} exceeds 1 + {tolerance}")]
    WitnessRejected { estimate: f64, tolerance: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
