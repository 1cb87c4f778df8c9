use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{tag}: dimension mismatch, expected {expected}, got {got}")]
    DimensionMismatch {
        tag: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parallel composition undefined as single-valued map: {0}")]
    RankDeficient(String),

    #[error("step size violates the admissible interval: gamma = {gamma}, allowed [{lo}, {hi}]")]
    StepSize { gamma: f64, lo: f64, hi: f64 },

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
