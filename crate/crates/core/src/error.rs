use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integration blew up at t = {time}: {detail}")]
    Integration { time: f64, detail: String },

    #[error("reduced system unstable at step {step}")]
    Unstable { step: usize },

    #[error("malformed file {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("degenerate density: {0}")]
    DegeneratePdf(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{failed} of {total} ensemble members blew up (more than 5%)")]
    EnsembleFailure { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
