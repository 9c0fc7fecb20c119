use std::io;

use thiserror::Error;

/// Errors raised by the arcgate library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("domain error at index {index}: {source}")]
    DomainAt {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad IDX magic number: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },

    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("dimension mismatch: {images} images against {labels} labels")]
    DimensionMismatch { images: usize, labels: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("stale or mismatched forward cache: {0}")]
    StaleCache(String),

    #[error("non-finite gradient in {group} at index {index}: {value}")]
    NonFiniteGradient {
        group: String,
        index: usize,
        value: f64,
    },

    #[error("training diverged at epoch {epoch}, step {step} (loss {loss})")]
    Divergence { epoch: usize, step: usize, loss: f64 },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}
