use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the anchoring solvers and the simulation layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix entry ({row}, {col}) is negative or not finite: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("cannot encode zero vector")]
    ZeroVector,

    #[error("degenerate linear operation: no eigenpair contributes to the output state")]
    DegenerateLinearOperation,

    #[error("degenerate projection for direction {0}: projected vector is identically zero")]
    DegenerateProjection(usize),

    #[error("insufficient votes: {distinct} distinct indexes voted, {required} required")]
    InsufficientVotes { distinct: usize, required: usize },

    #[error("no finite sample count satisfies the gap condition (gap is zero)")]
    NoFiniteSampleCount,

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("dimension {dim} exceeds the density-matrix limit of {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("could not generate non-degenerate anchors after {0} attempts")]
    GenerationFailed(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    /// True for failures caused by the filesystem or malformed input files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
