//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A sensitive group required by a fairness quantity is absent.
    #[error("empty sensitive group: {0}")]
    EmptyGroup(String),

    /// The empirical group proportion is outside (0, 1).
    #[error("degenerate group proportion p1={0}; must lie strictly in (0,1)")]
    DegenerateGroup(f64),

    /// A dataset is too small for the requested split.
    #[error("dataset too small: {0}")]
    TooSmall(String),

    /// Malformed on-disk row.
    #[error("format error at {path}:{row}: {msg}")]
    Format {
        path: String,
        row: usize,
        msg: String,
    },

    /// A value is outside its declared domain (z not in {-1,1}, y not in {0,1}, ...).
    #[error("invalid value at {path}:{row}: {msg}")]
    Value {
        path: String,
        row: usize,
        msg: String,
    },

    /// Vector or network dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Aligned batches have different lengths.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// A training loss became NaN or infinite.
    #[error("non-finite loss at iteration {iteration}: {loss_name}")]
    NonFiniteLoss { iteration: usize, loss_name: String },

    /// A synthetic-domain specification is inconsistent.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// The upper-bound computation was given no source domains.
    #[error("no source domains given")]
    EmptySources,

    /// Checkpoint container cannot be used.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
