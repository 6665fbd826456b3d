use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "decimated rate {rate_hz:.0} Hz is below 4x the signal bandwidth {bandwidth_hz:.0} Hz"
    )]
    Aliasing { rate_hz: f64, bandwidth_hz: f64 },

    #[error("phase is unreliable: {zero_fraction:.3} of baseband samples have zero magnitude")]
    UnreliablePhase { zero_fraction: f64 },

    #[error("no signal found in demodulated trace")]
    NoSignalFound,

    #[error("fewer than two transitions in binarized trace")]
    NoTransitions,

    #[error("no energy transient found: {0}")]
    NoTransient(String),

    #[error("degenerate segment: {0}")]
    DegenerateSegment(String),

    #[error("feature column {0} is constant in the training rows")]
    ConstantFeature(usize),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("file format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
