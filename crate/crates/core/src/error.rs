use std::path::PathBuf;

/// Errors raised by the loading library and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum LoadingError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The subcarrier cannot carry the requested load at any finite power.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Channel-to-noise ratio is below the activation threshold; the caller must null the subcarrier.
    #[error("cnr {cnr} is below the activation threshold {threshold}")]
    BelowThreshold { cnr: f64, threshold: f64 },

    #[error("exhaustive search over {candidates:e} candidates exceeds the limit of {limit:e}")]
    InstanceTooLarge { candidates: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("could not parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, LoadingError>;

pub(crate) fn invalid(msg: impl Into<String>) -> LoadingError {
    LoadingError::InvalidArgument(msg.into())
}
