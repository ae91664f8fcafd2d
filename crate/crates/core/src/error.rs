use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameters (maps to CLI exit code 2).
    #[error("configuration: {0}")]
    Config(String),

    /// Mismatched array shapes or channel counts.
    #[error("shape: {0}")]
    Shape(String),

    /// Numeric failure: NaN/Inf, divergence, singular systems (CLI exit code 3).
    #[error("numeric: {0}")]
    Numeric(String),

    /// Malformed file container (bad magic, truncation, version mismatch).
    #[error("format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
