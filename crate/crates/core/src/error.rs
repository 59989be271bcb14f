use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum DoaError {
    #[error("angle {0} rad is outside [-pi/2, pi/2]")]
    AngleOutOfRange(f64),

    #[error("non-physical DOA components: 2(w + alpha)/M = {0} is outside [-1, 1]")]
    NonPhysical(f64),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value at iteration {iteration} in stage `{stage}`")]
    NonFinite { iteration: usize, stage: &'static str },

    #[error("{0} is not supported")]
    Unsupported(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = DoaError> = std::result::Result<T, E>;
