//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A file failed to parse; carries the path and byte offset of the defect.
    #[error("{}: byte {offset}: {msg}", path.display())]
    Malformed {
        path: PathBuf,
        offset: u64,
        msg: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("{}: line {line}: {msg}", path.display())]
    Config {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

impl Error {
    pub fn malformed(path: impl Into<PathBuf>, offset: u64, msg: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            offset,
            msg: msg.into(),
        }
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
