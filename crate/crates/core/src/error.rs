//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A pair of shapes shares infinitely many boundary points.
    #[error("degenerate shape pair: {0}")]
    DegeneratePair(String),

    #[error("invalid shape encoding: {0}")]
    Decode(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("room placement failed: {0}")]
    Placement(String),

    #[error("ambiguous relative direction (within {0:e} of a diagonal)")]
    Ambiguous(f64),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("optimizer: non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed file {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
