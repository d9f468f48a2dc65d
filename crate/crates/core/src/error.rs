use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("length error: expected {expected} bytes of payload, found {found}")]
    Length { expected: usize, found: usize },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("band {band} is constant and cannot be standardized")]
    DegenerateBand { band: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("split error (class {class}): {message}")]
    Split { class: u16, message: String },

    #[error("numeric error at {context}, step {step}: non-finite value")]
    Numeric { context: String, step: usize },

    #[error("contract error: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("image encoding failed: {0}")]
    Image(String),
}

pub type Result<T> = std::result::Result<T, Error>;
