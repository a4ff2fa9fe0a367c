use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured size cap (memory, candidate count) would be exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Input data is malformed (non-finite values, shape mismatch).
    #[error("invalid data: {0}")]
    Data(String),

    /// The instance is numerically degenerate (e.g. rank-deficient design block).
    #[error("degenerate instance: {0}")]
    Degenerate(String),

    /// An experiment or CLI configuration is invalid.
    #[error("invalid config: {0}")]
    Config(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
