use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its valid domain (bad probability, odd K, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("graph contains a cycle")]
    Cycle,

    /// A structural invariant does not hold on supplied data.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("vertex {0} is not assigned to any unit")]
    Unplaced(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {message}")]
    Malformed { what: &'static str, message: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
