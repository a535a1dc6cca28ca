use std::path::PathBuf;

use becr_core::Error as CoreError;

/// Failure of a CLI command, carrying the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or parameter values (exit 1).
    #[error("usage: {0}")]
    Usage(String),

    /// Unreadable or malformed input data (exit 2).
    #[error("input error: {0}")]
    Input(String),

    /// Data for which the requested quantity is undefined (exit 3).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Internal consistency check failed (exit 4).
    #[error("consistency failure: {0}")]
    Consistency(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Degenerate(_) => 3,
            CliError::Consistency(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Maps a library error raised while validating flag values.
    pub(crate) fn from_params(err: CoreError) -> Self {
        match err {
            CoreError::InvalidInput(msg) => CliError::Usage(msg),
            other => Self::from_data(other),
        }
    }

    /// Maps a library error raised while processing input data.
    pub(crate) fn from_data(err: CoreError) -> Self {
        match err {
            CoreError::InvalidInput(msg) => CliError::Input(msg),
            e @ CoreError::InsufficientSamples { .. } => CliError::Input(e.to_string()),
            e @ CoreError::DegenerateSpectrum => CliError::Degenerate(e.to_string()),
            e @ CoreError::Convergence { .. } => CliError::Consistency(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
