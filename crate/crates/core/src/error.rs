use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HkError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HkError {
    /// Shapes or parameters that do not describe a valid model.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schedule exhausted: table has {len} rows, requested t = {t}")]
    ScheduleExhausted { t: u64, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("size limit exceeded: n = {n} > {max} ({what})")]
    SizeLimit { n: usize, max: usize, what: &'static str },

    #[error("numerical failure: {message} (best value {best}, gap bound {gap})")]
    Numerical { message: String, best: f64, gap: f64 },

    #[error("integrity error in {path}: {message}")]
    Integrity { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HkError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HkError::Io { path: path.into(), source }
    }

    pub(crate) fn integrity(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        HkError::Integrity { path: path.into(), message: message.into() }
    }
}
