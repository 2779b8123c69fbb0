use std::path::PathBuf;

/// Errors raised anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("precision not reached: {0}")]
    Precision(String),

    #[error("resource limit: {what} needs {required} (limit {limit})")]
    ResourceLimit {
        what: String,
        required: u64,
        limit: u64,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("inconsistent result: {0}")]
    Inconsistency(String),

    #[error("unknown form '{0}'")]
    UnknownForm(String),

    #[error("cache file {path}: {reason}")]
    Cache { path: PathBuf, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialisation error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
