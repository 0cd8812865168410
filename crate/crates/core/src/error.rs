use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = In2vError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum In2vError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Loss or gradient became non-finite, usually because the learning rate is too high.
    #[error("numerical overflow: {0}")]
    NumericalOverflow(String),

    #[error("missing artifact {}: {hint}", path.display())]
    MissingArtifact { path: PathBuf, hint: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl In2vError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        In2vError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        In2vError::Validation(msg.into())
    }

    /// Process exit code: 2 for data problems, 3 for numerical failure.
    /// Usage errors (1) are produced by the argument parser before any of these exist.
    pub fn exit_code(&self) -> i32 {
        match self {
            In2vError::NumericalOverflow(_) => 3,
            _ => 2,
        }
    }
}
