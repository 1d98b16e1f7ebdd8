use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("missing moment order {0} in trace")]
    MissingOrder(usize),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("ill-conditioned moment problem: {digits_lost:.1} digits lost (input carries {available:.1})")]
    Conditioning { digits_lost: f64, available: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
