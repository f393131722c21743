use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration; the message starts with the offending field.
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error at byte offset {offset}: {reason}")]
    Parse {
        path: PathBuf,
        offset: usize,
        reason: String,
    },

    #[error(transparent)]
    Solver(#[from] lrsparse::Error),
}

impl CliError {
    pub(crate) fn config(field: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{field}: {reason}"))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
