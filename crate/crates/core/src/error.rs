use thiserror::Error;

use crate::krylov::ConvergenceHistory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: iterative solver did not converge (relative residual {residual:.3e})")]
    NotConverged {
        stage: &'static str,
        residual: f64,
        history: Box<ConvergenceHistory>,
    },

    #[error("{0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
