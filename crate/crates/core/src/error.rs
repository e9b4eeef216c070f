use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown time unit `{0}` (expected minute, hour, day, week, month or year)")]
    UnknownUnit(String),

    #[error("invalid duration `{0}`: expected \"<value> <unit>\"")]
    BadDuration(String),

    #[error("unknown event `{0}`")]
    UnknownEvent(String),

    #[error("unknown adverbial `{0}`")]
    UnknownAdverbial(String),

    #[error("no baseline parameters for pair ({event}, {adverbial})")]
    UnknownPair { event: String, adverbial: String },

    #[error("value {value} outside range [{min}, {max}]")]
    Range { value: i64, min: i64, max: i64 },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },

    /// Structurally invalid input to an operation (empty data, bad counts, duplicate ids).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }
}
