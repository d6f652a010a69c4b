use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("pose estimation failed: {0}")]
    Estimation(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("dataset integrity check failed, {} missing path(s): {missing:?}", missing.len())]
    Integrity { missing: Vec<PathBuf> },

    #[error("training diverged at epoch {epoch}: {reason} (loss trace {trace:?})")]
    Training {
        epoch: usize,
        reason: String,
        trace: Vec<f64>,
    },

    #[error("missing dependency: {0}")]
    Dependency(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
