use thiserror::Error;

/// Errors surfaced by the library. Dimension and parameter problems are
/// caught at call boundaries; `Conditioning` marks solver failures that
/// survived ridge escalation; `Capacity` marks guarded resource limits.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("conditioning failure: {0}")]
    Conditioning(String),
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
