use std::path::PathBuf;

use crate::dynamics::QuadrotorState;

/// Errors produced by the simulator, trainer and evaluation harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The integrator produced a non-finite state.
    #[error("numerical divergence: {reason}")]
    NumericalDivergence {
        reason: String,
        state: Option<Box<QuadrotorState>>,
    },

    /// API misuse, e.g. stepping an environment whose episode has ended.
    #[error("usage error: {0}")]
    Usage(String),

    /// Invalid configuration; `path` names the offending field.
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
