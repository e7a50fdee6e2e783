use std::path::Path;

use crate::checkpoint::CheckpointError;

/// Failures surfaced by the CLI. [`Error::Usage`] maps to exit code 2,
/// everything else to 1.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {msg}")]
    Decode { path: String, msg: String },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{0}")]
    Data(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }

    pub fn decode(path: &Path, msg: impl ToString) -> Self {
        Error::Decode { path: path.display().to_string(), msg: msg.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
