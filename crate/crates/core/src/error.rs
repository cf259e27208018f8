use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("clusterings are over different point sets")]
    MismatchedPointSets,

    #[error("undefined denominator: need at least two points")]
    UndefinedDenominator,

    #[error("silhouette undefined for a single cluster")]
    SingleCluster,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid clustering: {0}")]
    InvalidClustering(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("singular linear system; use ridge_lambda > 0")]
    SingularSystem,

    #[error("eigensolver failed to converge after {sweeps} sweeps")]
    EigensolverFailed { sweeps: usize },

    #[error("invalid distance function: {0}")]
    InvalidDistance(String),

    #[error("non-finite gradient in parameter block {block}")]
    NonFiniteGradient { block: String },

    #[error("all algorithms failed")]
    AllAlgorithmsFailed,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("split {split} (seed {seed}) failed: {source}")]
    SplitFailed {
        split: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that come from the filesystem rather than the inputs.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::SplitFailed { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
