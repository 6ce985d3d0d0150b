use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("csv schema error: {0}")]
    Schema(String),

    #[error("line {line}: {message}")]
    Row { line: usize, message: String },

    #[error("line {line}: cannot parse `{value}` in column `{column}`")]
    Parse {
        line: usize,
        column: String,
        value: String,
    },

    #[error("sample {index} has neither a label nor a resistance value")]
    Unlabeled { index: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model file version {found} is not supported (expected version {expected})")]
    Version { expected: u32, found: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The innermost error once fold wrappers are removed.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Fold { source, .. } => source.root_cause(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
