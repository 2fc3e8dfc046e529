use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the vantage engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point outside the grid domain: {0}")]
    OutOfDomain(String),

    #[error("degenerate map: {0}")]
    DegenerateMap(String),

    #[error("invalid vantage: {0}")]
    InvalidVantage(String),

    #[error("no candidate node available: {0}")]
    NoCandidate(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("format error in {path:?}: {reason}")]
    Format { path: Option<PathBuf>, reason: String },

    #[error("scene generation failed: {0}")]
    GenerationFailure(String),

    #[error("external estimator failed: {0}")]
    Estimator(String),

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(path: Option<&std::path::Path>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.map(|p| p.to_path_buf()),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
