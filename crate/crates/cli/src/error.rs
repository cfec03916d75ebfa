use std::path::PathBuf;

use thiserror::Error;

/// Failures that map to a process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or missing inputs: exit 2.
    #[error("{0}")]
    Usage(String),

    #[error("{what} not found at {}; run `ks-narmax {producer}` first", path.display())]
    MissingInput { what: &'static str, path: PathBuf, producer: &'static str },

    /// The run finished but the model failed a check: exit 1.
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] ks_narmax::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::MissingInput { .. } => 2,
            CliError::Validation(_) | CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
