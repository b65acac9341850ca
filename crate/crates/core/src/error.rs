use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("target column `{0}` is not numeric")]
    TargetNotNumeric(String),

    #[error("no usable features")]
    NoUsableFeatures,

    #[error("dataset too small: {0} rows (need at least 3)")]
    DatasetTooSmall(usize),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("degenerate pair ({0}, {0})")]
    DegeneratePair(usize),

    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("feature vector has length {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty training batch")]
    EmptyBatch,

    #[error("pair pool exhausted: requested {requested}, {remaining} unqueried pairs remain")]
    PoolExhausted { requested: usize, remaining: u64 },

    #[error("inconsistent query grids: {0}")]
    InconsistentGrid(String),

    #[error("corrupt model bytes: {0}")]
    CorruptModel(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
