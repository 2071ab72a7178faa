use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}: row {row}: {message}")]
    Parse {
        source_name: String,
        row: usize,
        message: String,
    },

    #[error("link {link} references unknown vertex {vertex:?}")]
    DanglingEndpoint { link: String, vertex: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("variable {0} is not registered")]
    UnknownVariable(String),

    #[error("term of degree {0} cannot be stored in a quadratic model; reduce it first")]
    Degree(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("degenerate range: upper bound {upper} does not exceed lower bound {lower}")]
    DegenerateRange { lower: f64, upper: f64 },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("variable {0} is already in use and cannot serve as a fresh product variable")]
    Aliasing(String),

    #[error("balancing constraint is degenerate: {0}")]
    DegenerateBalancing(String),

    #[error("search space of {size} assignments exceeds the enumeration bound {bound}")]
    SizeGuard { size: f64, bound: u64 },

    #[error("no feasible assignment exists")]
    Infeasible,

    #[error("tuning failed: no zero-violation grid point (best had {violations} violations at {lambdas:?})")]
    TuningFailure { lambdas: Vec<f64>, violations: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
