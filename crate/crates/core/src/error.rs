use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: u64,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: missing value in label column `{column}`")]
    MissingLabel { row: u64, column: String },

    #[error("row {row}, column `{column}`: {message}")]
    BadValue {
        row: u64,
        column: String,
        message: String,
    },

    #[error("unknown level `{level}` in categorical column `{column}`")]
    UnknownLevel { column: String, level: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("non-finite loss during training")]
    NonFiniteLoss,

    #[error("undefined metric {metric} on side {side}: empty denominator")]
    UndefinedMetric { metric: &'static str, side: u8 },

    #[error("cell `{cell}`, repeat {repeat}: {source}")]
    Cell {
        cell: String,
        repeat: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
