use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
///
/// Record-level problems carry the 1-based record number (line for jsonl,
/// data row for csv, row for binary) so messages can point at the input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at row {row}: {message}")]
    Malformed { row: usize, message: String },

    #[error("dimension mismatch at row {row}: expected {expected}, found {found}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("duplicate sample id {id:?} at row {row}")]
    DuplicateId { row: usize, id: String },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("HTTP request failed after {attempts} attempt(s): {message}")]
    Http { attempts: usize, message: String },

    #[error("row count mismatch: expected {expected}, found {found}")]
    RowCountMismatch { expected: usize, found: usize },

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient rows: need {needed}, have {available} ({what})")]
    InsufficientRows {
        what: String,
        needed: usize,
        available: usize,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Whether the error stems from bad user input (exit code 2) rather than
    /// an environment or internal failure (exit code 1).
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Http { .. } | Error::Serde(_))
    }
}
