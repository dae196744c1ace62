use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A structural or model parameter violates its invariant.
    #[error("invalid {field}: {reason}")]
    Config { field: &'static str, reason: String },

    /// Array dimensions that must agree do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Malformed IDX container.
    #[error("{path}: parse error at byte offset {offset}: {reason}")]
    Idx {
        path: PathBuf,
        offset: u64,
        reason: String,
    },

    /// Malformed weight file.
    #[error("weights line {line}: {reason}")]
    Weights { line: usize, reason: String },

    /// Malformed run configuration. `location` is a file line or a flag.
    #[error("{location}, key `{key}`: {reason}")]
    ConfigEntry {
        location: String,
        key: String,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by input data (files, images) rather than
    /// by configuration or usage.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_) | Error::Idx { .. } | Error::Weights { .. } | Error::Io { .. }
        )
    }
}
