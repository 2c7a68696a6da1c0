use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("label column must take exactly two values, found {0:?}")]
    NonBinaryLabel(Vec<String>),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for a dataset of {n} examples")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("split with fraction {fraction} of {n} examples leaves one side empty")]
    DegenerateSplit { fraction: f64, n: usize },

    #[error("only {eligible} rows have a label differing from the sensitive attribute, {requested} requested")]
    InsufficientEligible { eligible: usize, requested: usize },

    #[error("column `{0}` does not take values in {{-1, +1}} or {{0, 1}}")]
    NonBinaryAttribute(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solver did not converge on an index set of size {size} after {iterations} iterations")]
    NotConverged {
        size: usize,
        iterations: usize,
        /// Best iterate reached before giving up.
        best: Box<crate::solver::DualSolution>,
    },

    #[error("search heap exceeded its capacity of {0} entries")]
    HeapOverflow(usize),

    #[error("brute-force enumeration supports at most {max} examples, got {n}")]
    OracleTooLarge { n: usize, max: usize },

    #[error("oracle solver hit its iteration cap of {0}")]
    OracleIterationCap(usize),

    #[error("group {0} of the sensitive attribute is empty")]
    EmptyGroup(i8),

    #[error("snapshot does not match the dataset: {0}")]
    SnapshotMismatch(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
