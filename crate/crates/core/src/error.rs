use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid distribution, parameter or model selection.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// Malformed scenario or record file.
    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    /// An operation was called on input that does not meet its precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A record stream violates the one-trial-per-tick clock contract.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// A shifted tick fell outside the representable range.
    #[error("range error: {0}")]
    Range(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Parse { .. } => 2,
            Error::Precondition(_) | Error::Range(_) => 3,
            Error::Integrity(_) => 4,
            Error::Io { .. } => 5,
        }
    }
}
