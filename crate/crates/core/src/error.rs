use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("unknown node id `{0}`")]
    UnknownNode(String),

    #[error("self-edge on node `{0}`")]
    SelfEdge(String),

    #[error("self weight {0} outside [0, 1)")]
    InvalidSelfWeight(f64),

    #[error("node `{0}` has no edges and the self weight is 0; its transition row would be all zero")]
    IsolatedNode(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unknown sensor id `{0}`")]
    UnknownSensor(String),

    #[error("unparseable timestamp `{0}`")]
    BadTimestamp(String),

    #[error("{malformed} of {total} lines malformed (first at line {first_line}: {first_reason})")]
    TooManyMalformed {
        malformed: usize,
        total: usize,
        first_line: usize,
        first_reason: String,
    },

    #[error("only {0} chunks available for {1} folds")]
    TooFewChunks(usize, usize),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("route step {from} -> {to} has no edge in the accessibility graph")]
    DisconnectedRoute { from: String, to: String },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
