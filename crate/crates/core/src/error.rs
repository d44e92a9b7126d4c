use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} variables, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is infeasible: {constraint} violated by {violation:e}")]
    Infeasible { constraint: String, violation: f64 },

    #[error("relaxation level {k} is below the minimum admissible level {min_k}")]
    LevelTooLow { k: usize, min_k: usize },

    #[error("degenerate dual: moment y_0 = {0:e} cannot be normalized")]
    DegenerateDual(f64),

    #[error("invalid SDP problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("solver did not reach an optimal point: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
