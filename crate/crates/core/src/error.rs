use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("enumeration guard exceeded: {what} needs {size} evaluations (limit {limit})")]
    GuardExceeded {
        what: &'static str,
        size: f64,
        limit: f64,
    },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("outer constraint has no compact polytope description")]
    NoCompactPolytope,

    #[error("simplex stalled after {iterations} iterations: {detail}")]
    LpStall { iterations: usize, detail: String },

    #[error("solution is not certified: {0}")]
    Uncertified(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
