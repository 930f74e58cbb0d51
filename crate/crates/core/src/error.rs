use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV input: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("input has no data rows")]
    NoRows,

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{column}` has no value `{value}`")]
    UnknownValue { column: String, value: String },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("no rows left to estimate from ({0})")]
    EmptySelection(String),

    #[error("joint domain of {0} columns is too large to tabulate")]
    DomainTooLarge(usize),

    #[error("missing-data handling for `{column}`: {reason}")]
    Missingness { column: String, reason: String },

    #[error("knowledge-graph request failed: {0}")]
    Fetch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category, used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::DuplicateColumn(_) | Error::NoRows | Error::InvalidData(_) => "data",
            Error::UnknownColumn(_) | Error::UnknownValue { .. } | Error::InvalidQuery(_) => {
                "query"
            }
            Error::InvalidConfig(_) => "config",
            Error::EmptySelection(_) | Error::DomainTooLarge(_) => "estimator",
            Error::Missingness { .. } => "missing-data",
            Error::Fetch(_) => "fetch",
        }
    }
}
