use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants fall into two families: I/O failures (the filesystem said no)
/// and validation failures (the inputs were malformed or inconsistent).
/// [`Error::is_io`] tells them apart for callers that map errors to exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("eigensolver did not converge for eigenpair {index} within {iterations} iterations")]
    Convergence { index: usize, iterations: usize },

    #[error("rank deficient: requested {requested} directions but data supports {achieved}")]
    RankDeficient { requested: usize, achieved: usize },

    #[error("insufficient variation: {0}")]
    InsufficientVariation(String),

    #[error("degenerate range: {0}")]
    DegenerateRange(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("spec error: {0}")]
    Spec(String),

    #[error("format error at {pointer}: {message}")]
    Format { pointer: String, message: String },

    #[error("corruption in {file}: expected {expected} bytes, found {actual}")]
    Corruption {
        file: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("checksum mismatch for {file}: manifest says {expected}, content hashes to {actual}")]
    Checksum {
        file: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}
