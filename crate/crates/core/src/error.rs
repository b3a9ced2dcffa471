use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing value for field {field}")]
    MissingValue { field: String },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid time {0:?}")]
    InvalidTime(String),

    #[error("invalid date {0:?}")]
    InvalidDate(String),

    #[error("invalid amount {0}")]
    InvalidAmount(f64),

    #[error("dataset has no labels")]
    NoLabels,

    #[error("meta-rule error: {0}")]
    Rule(String),

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("imported embedding table has no vector for node {0}")]
    MissingEmbedding(String),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("behavior {0} has no nodes")]
    EmptyBehavior(String),

    #[error("training set contains a single class")]
    DegenerateLabels,

    #[error("evaluation input is empty")]
    EmptyEval,

    #[error("history is empty")]
    EmptyHistory,

    #[error("K must be positive, got {0}")]
    InvalidK(i64),

    #[error("graph has {nodes} nodes but the decoder supports at most {max}")]
    TooManyNodes { nodes: usize, max: usize },

    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Shape {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    /// Coarse classification used by the command line for exit codes.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
