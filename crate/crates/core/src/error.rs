use thiserror::Error;

/// Errors produced by the testing, discovery and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("data has no columns")]
    NoColumns,

    #[error("column index {index} out of range for {available} columns")]
    ColumnOutOfRange { index: usize, available: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("column sets overlap on column {0}")]
    OverlappingColumns(usize),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    #[error("independence query {x} _||_ {y} | {z:?} failed: {source}")]
    OracleFailure {
        x: usize,
        y: usize,
        z: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("file not found: {0}")]
    MissingFile(String),

    #[error("column not found: {0}")]
    MissingColumn(String),

    #[error("no rows left after dropping missing values")]
    NoRows,

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable process exit code for each error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingFile(_) | Error::Io(_) => 3,
            Error::MissingColumn(_) | Error::ColumnOutOfRange { .. } => 4,
            Error::NoRows => 5,
            Error::NonFinite { .. }
            | Error::TooFewRows { .. }
            | Error::NoColumns
            | Error::Csv(_)
            | Error::Json(_) => 6,
            Error::DimensionMismatch(_)
            | Error::InvalidArgument(_)
            | Error::OverlappingColumns(_) => 7,
            Error::Eigen(_) | Error::Factorization(_) | Error::OracleFailure { .. } => 8,
        }
    }
}
