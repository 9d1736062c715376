use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("empty shape")]
    EmptyShape,
    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),
    #[error("volume fraction L must lie in (0,1), got {0}")]
    InvalidVolumeFraction(f64),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("static Mayer problem has no criterion")]
    StaticMayer,
    #[error("invalid cost: {0}")]
    InvalidCost(String),
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
