use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("shape mismatch: expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("invalid argument `{name}`: {reason}")]
    Argument { name: &'static str, reason: String },
    #[error("point lies within {distance:e} of the singular set")]
    Singular { distance: f64 },
    #[error("under-resolved grid: {0}")]
    Resolution(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("regression failed: {0}")]
    Regression(String),
    #[error("algebra: {0}")]
    Algebra(String),
    #[error("class: {0}")]
    Class(String),
    #[error("grid overflow: {0}")]
    Overflow(String),
    #[error("config: {0}")]
    Config(String),
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("check `{id}`: {source}")]
    Check { id: String, source: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Argument {
        name,
        reason: reason.into(),
    }
}
