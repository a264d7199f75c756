use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by corpus I/O, preprocessing, the numerical kernels and
/// the experiment engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Filesystem failure, annotated with the path that was being touched.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed on-disk file, pointing at the offending file and line.
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    /// A precondition violation: bad shapes, out-of-range parameters,
    /// inconsistent labels.
    #[error("{0}")]
    InvalidInput(String),

    /// A numerical routine failed to converge or produced an unusable result.
    #[error("{0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    pub(crate) fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
