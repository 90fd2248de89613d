//! Shared error type for all engine modules.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record in an input file failed to parse. `record` is 1-based
    /// (line number for line-oriented formats).
    #[error("parse error in {path}, record {record}: {message}")]
    Parse {
        path: PathBuf,
        record: usize,
        message: String,
    },

    /// Input data violated a documented precondition or invariant.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, record: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            record,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
