use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("duplicate observation for company `{company}` in year {year}")]
    Duplicate { company: String, year: i32 },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("split error: {message}; rows per year: {histogram:?}")]
    Split {
        message: String,
        histogram: Vec<(i32, usize)>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected} columns, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("game has {players} players, above the exact-enumeration cap of {cap}; use a sampling estimator")]
    Capacity { players: usize, cap: usize },

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(e: csv::Error) -> Self {
        Error::Validation(format!("csv error: {e}"))
    }

    /// Broad category used by front-ends to pick an exit status.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Capacity { .. } | Error::Partition(_) => ErrorCategory::Config,
            Error::Numerical(_) => ErrorCategory::Numerical,
            Error::Io { .. } => ErrorCategory::Io,
            _ => ErrorCategory::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerical,
    Io,
}
