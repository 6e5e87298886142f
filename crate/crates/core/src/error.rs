use std::path::PathBuf;

/// Errors raised by the dereverberation toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration or precondition was violated before any work was done.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Inputs that do not agree in shape, length or configuration.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The numerics broke down (non-finite data, singular systems).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav error on {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
