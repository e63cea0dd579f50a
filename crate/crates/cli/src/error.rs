use std::path::PathBuf;

use thiserror::Error;

/// Failures that abort a command before a report is produced.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] unitroot::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(unitroot::Error::UnsupportedOrder(_)) => exit::UNSUPPORTED,
            _ => exit::ERROR,
        }
    }
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const VERIFICATION: i32 = 2;
    pub const UNSUPPORTED: i32 = 3;
}
