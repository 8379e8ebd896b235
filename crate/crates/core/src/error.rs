use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong between ingesting records and printing a prediction.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{path}: row {row}: {message}")]
    Ingestion {
        path: String,
        row: u64,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("model structure error: {0}")]
    ModelStructure(String),

    #[error("model file error: line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("evaluation error: labels unknown to the ensemble: {0:?}")]
    UnknownLabels(Vec<String>),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 internal numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) => 1,
            Error::Ingestion { .. }
            | Error::Data(_)
            | Error::ModelStructure(_)
            | Error::ModelFormat { .. }
            | Error::UnknownLabels(_)
            | Error::Io { .. } => 2,
            Error::Numeric(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
