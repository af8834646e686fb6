use std::path::PathBuf;

/// Errors produced by the simulator.
///
/// Variants fall into three groups (configuration, data, runtime) which the
/// command-line front end maps onto distinct exit codes via [`Error::category`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // configuration
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}:{line}: unknown configuration key `{key}`")]
    UnknownKey {
        path: PathBuf,
        line: usize,
        key: String,
    },
    #[error("{path}:{line}: cannot parse value `{value}` for key `{key}`")]
    BadValue {
        path: PathBuf,
        line: usize,
        key: String,
        value: String,
    },
    #[error("contradictory configuration keys `{first}` and `{second}`")]
    ContradictoryKeys { first: String, second: String },

    // data
    #[error("cannot read dataset {path}: {source}")]
    MissingFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad CSV header: {0}")]
    BadHeader(String),
    #[error("row {row}: expected {expected} columns, found {found}")]
    MalformedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column `{column}`: `{value}` is not a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: label {label} outside 0..{num_classes}")]
    LabelOutOfRange {
        row: usize,
        label: i64,
        num_classes: usize,
    },
    #[error("row {row}, column {column}: value {value} outside [0, 1] after scaling")]
    ValueOutOfRange {
        row: usize,
        column: usize,
        value: f64,
    },
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("cannot partition {rows} rows across {clients} clients")]
    TooManyClients { rows: usize, clients: usize },

    // runtime
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("aggregation weights sum to zero")]
    ZeroTotalWeight,
    #[error("nothing to aggregate")]
    NoModels,
    #[error("malicious client {client} does not exist among {clients} clients")]
    NoSuchClient { client: usize, clients: usize },
    #[error("confusion matrix is empty")]
    EmptyConfusion,
    #[error("class index {index} outside 0..{num_classes}")]
    ClassOutOfRange { index: usize, num_classes: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse grouping of [`Error`] variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Runtime,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            InvalidConfig(_) | UnknownKey { .. } | BadValue { .. } | ContradictoryKeys { .. } => {
                ErrorCategory::Config
            }
            MissingFile { .. }
            | BadHeader(_)
            | MalformedRow { .. }
            | NonNumeric { .. }
            | LabelOutOfRange { .. }
            | ValueOutOfRange { .. }
            | InvalidData(_)
            | DegenerateSplit(_)
            | TooManyClients { .. } => ErrorCategory::Data,
            _ => ErrorCategory::Runtime,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
