//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("delta = 0 is not supported here; ordinary records have no delta-hazard normalizer theory")]
    DeltaZero,

    #[error("table depth {depth} too small: {reason}")]
    DepthTooSmall { depth: i64, reason: String },

    #[error("argument out of tabulated range: {0}")]
    OutOfRange(String),

    #[error("normalizer variant {variant} does not apply: {reason}")]
    RegimeMismatch { variant: String, reason: String },

    #[error("{0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
