use thiserror::Error;

use crate::lp::LpError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{what}: dimension {dim} exceeds cap {cap}")]
    Capability {
        what: &'static str,
        dim: usize,
        cap: usize,
    },
    #[error("polytope is empty")]
    EmptyPolytope,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
