use thiserror::Error;

/// Errors raised by encoder construction, verification and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid qudit dimension {0}: need d >= 2")]
    InvalidDimension(usize),

    #[error("invalid Young diagram {0:?}: rows must be positive and weakly decreasing")]
    InvalidShape(Vec<usize>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("copy alignment failed for copy {copy}: residual {residual:e}")]
    AlignmentFailure { copy: usize, residual: f64 },

    #[error("resource limit: {what} needs {entries} complex entries, cap is {cap}")]
    Resource {
        what: String,
        entries: u128,
        cap: u128,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
