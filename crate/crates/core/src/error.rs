//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure classes. The CLI maps these onto exit codes, so new variants
/// must pick one of the existing classes (see [`Error::class`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("ordering error: snapshot at t={later} does not come after t={at}")]
    Ordering { at: i64, later: i64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("enumeration cap exceeded: {count} policies > cap {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("numeric failure at epoch {epoch}: {detail}")]
    Numeric { epoch: usize, detail: String },

    #[error("corrupt file {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },

    #[error("unsupported version in {path}: {detail}")]
    Version { path: PathBuf, detail: String },

    #[error("refusing to overwrite {0} (use force)")]
    Conflict(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Coarse grouping used for exit codes and test assertions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Resource,
    Numeric,
    Corruption,
    Version,
    Environment,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Validation(_) | Error::Ordering { .. } | Error::Degenerate(_) => {
                ErrorClass::Validation
            }
            Error::EnumerationCap { .. } => ErrorClass::Resource,
            Error::Numeric { .. } => ErrorClass::Numeric,
            Error::Corrupt { .. } | Error::Json { .. } => ErrorClass::Corruption,
            Error::Version { .. } => ErrorClass::Version,
            Error::Conflict(_) | Error::Io { .. } => ErrorClass::Environment,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Corrupt {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
