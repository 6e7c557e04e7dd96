//! Host-side error type wrapping the core error with IO and format
//! failures.

use std::path::PathBuf;

use keyscope_core::CoreError;

pub type Result<T> = core::result::Result<T, AppError>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Usage(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        AppError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Exit status for the process: data problems exit 3, everything
    /// else 1 (clap's own usage errors exit 2 before we get here).
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Data(_) => 3,
            _ => 1,
        }
    }
}
