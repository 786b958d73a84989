use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("invalid group specification: {0}")]
    InvalidSpec(String),
    #[error("invalid bump shape: {0}")]
    InvalidShape(String),
    #[error("invalid cover: {0}")]
    InvalidCover(String),
    #[error("cover construction failed: {0}")]
    ConstructionFailed(String),
    #[error("experiment invalid: {0}")]
    ExperimentInvalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
