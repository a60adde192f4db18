//! Crate-wide error type and exit-code mapping for the CLI.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("bundle error: {0}")]
    Bundle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code contract: 1 for component/training errors, 2 for
    /// input/format errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Bundle(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::Config(_) | Error::Training(_) => 1,
        }
    }
}
