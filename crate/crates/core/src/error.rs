use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("estimator misuse: {0}")]
    Misuse(String),

    #[error("insufficient data: need at least {needed} experiments, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("singular fidelity: 2f-1 = {value:e}; gate angle is unidentifiable")]
    SingularFidelity { value: f64 },

    #[error("model mismatch: arcsin argument {argument} overshoots [-1, 1] by {overshoot:e}")]
    ModelMismatch { argument: f64, overshoot: f64 },

    #[error("delta {delta} is outside the validity regime for n={n} (ceiling {ceiling})")]
    OutOfRegime { delta: f64, n: u32, ceiling: f64 },

    #[error("incomplete archive in {}: {} missing or damaged block(s), first: {}", .dir.display(), .missing.len(), .missing.first().map(String::as_str).unwrap_or("-"))]
    IncompleteArchive { dir: PathBuf, missing: Vec<String> },

    #[error("malformed {what}: {reason}")]
    Format { what: String, reason: String },

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: impl Into<String>, reason: impl ToString) -> Self {
        Error::Format {
            what: what.into(),
            reason: reason.to_string(),
        }
    }
}
