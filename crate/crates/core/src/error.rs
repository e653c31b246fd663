use thiserror::Error;

pub type Result<T, E = NrnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NrnError {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input {index} has zero weight; required value is undefined")]
    ZeroWeight { index: usize },

    #[error("labels contain a single class")]
    SingleClass,

    #[error("labels must be 0 or 1, found {0}")]
    NonBinaryLabel(String),

    #[error("non-finite loss {loss} at epoch {epoch}, step {step}")]
    NonFiniteLoss { loss: f64, epoch: usize, step: usize },

    #[error("unsupported option: {0}")]
    Unsupported(String),

    #[error("network has no blocks")]
    EmptyNetwork,

    #[error("network structure invalid: {0}")]
    Structure(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("model document version {found} is newer than supported version {supported}")]
    Version { found: u32, supported: u32 },

    #[error("decode error at line {line}, column {column}: {message}")]
    Decode {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema mismatch: missing columns {missing:?}, unexpected columns {extra:?}")]
    Schema {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: {message}")]
    BadValue {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for NrnError {
    fn from(e: serde_json::Error) -> Self {
        NrnError::Decode {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
