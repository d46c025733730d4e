use thiserror::Error;

/// Errors produced by the solvers, the model and the sweep harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("component {index} = {value} is outside the open unit interval")]
    OutOfDomain { index: usize, value: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("map output left (0,1) at iterate {iterate}: component {index} = {value}")]
    OutputOutOfDomain { iterate: usize, index: usize, value: f64 },

    #[error("non-finite value encountered at iterate {iterate}")]
    NonFinite { iterate: usize },

    #[error("boundary hypothesis violated for coordinate {coordinate}: g({at}) = {g}")]
    BoundaryViolated { coordinate: usize, at: f64, g: f64 },

    #[error("inner solve failed along coordinate path {path:?}: {source}")]
    Nested {
        path: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("nested construction residual {residual:e} exceeds {threshold:e}")]
    ResidualTooLarge { residual: f64, threshold: f64 },

    #[error("dimension {dim} exceeds the nested-solver depth guard {max_depth}")]
    TooDeep { dim: usize, max_depth: usize },

    #[error("bracket failure at sample {sample}: {source}")]
    Sample {
        sample: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
