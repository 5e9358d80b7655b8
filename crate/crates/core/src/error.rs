use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the workbench.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration values.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Not enough data for the requested windows or estimates.
    #[error("sizing error: {what} (need at least {required}, have {available})")]
    Sizing {
        what: String,
        required: usize,
        available: usize,
    },

    /// A request would exceed the configured memory budget.
    #[error("resource error: {0}")]
    Resource(String),

    /// Training produced a non-finite value.
    #[error("training error at epoch {epoch}: {detail}")]
    Training { epoch: usize, detail: String },

    #[error("failed to load {path}: {detail}")]
    Load { path: PathBuf, detail: String },

    /// Bad command-line request, e.g. an unknown figure key.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite, got {v}")))
    }
}
