use std::io;
use std::path::PathBuf;

use epshoot_core::Error as CoreError;

/// Failures of the command-line tool, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or unusable input files. Exit code 2.
    #[error("{0}")]
    Usage(String),

    /// The computation ran but failed numerically. Exit code 1.
    #[error("{0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Format { .. } => 2,
            CliError::Numeric(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format { path: path.into(), message: message.into() }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) | CoreError::SizeMismatch { .. } | CoreError::Degenerate(_) => {
                CliError::Usage(e.to_string())
            }
            CoreError::Coincident { .. }
            | CoreError::NonFinite { .. }
            | CoreError::Singular
            | CoreError::NotConverged { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
