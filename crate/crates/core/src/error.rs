use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("inconsistent atom count: frame {frame} has {found} atoms, expected {expected}")]
    InconsistentAtomCount {
        frame: usize,
        expected: usize,
        found: usize,
    },

    #[error("inconsistent atom labels in frame {frame} at atom {atom}")]
    InconsistentLabels { frame: usize, atom: usize },

    #[error("no atoms matched the selection")]
    NoAtoms,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("neuron {neuron} won {hits} frames, fewer than the required {min_frames}")]
    InsufficientFrames {
        neuron: usize,
        hits: usize,
        min_frames: usize,
    },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
