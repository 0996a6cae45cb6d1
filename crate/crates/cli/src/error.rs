use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid {path}: {message}")]
    Validation { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Io { .. } | CliError::Runtime(_) => 1,
        }
    }

    /// Wraps a core error, prefixing parameter names with the experiment table.
    pub fn from_core(scope: &str, err: asyncgl::Error) -> Self {
        use asyncgl::Error as E;
        match err {
            E::InvalidParameter { field, message } => CliError::validation(format!("{scope}.{field}"), message),
            E::GridTooSmall { .. } | E::Parse { .. } => CliError::validation(scope, err.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
