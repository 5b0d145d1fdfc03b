use thiserror::Error;

/// Errors produced anywhere in the selection toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("column {0} has zero variance")]
    ConstantColumn(usize),

    #[error("cross-product matrix is numerically singular (conditioning ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("residual sum of squares is zero; t-values would be infinite")]
    PerfectFit,

    #[error("need more observations than predictors (n = {n}, p = {p})")]
    InsufficientDf { n: usize, p: usize },

    #[error("{p} predictors exceed the model width of {p_max}")]
    TooManyPredictors { p: usize, p_max: usize },

    #[error("exhaustive search limited to {max} predictors, got {p}")]
    TooManyPredictorsForExhaustive { p: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("coordinate descent did not converge within {0} cycles")]
    NoConvergence(usize),

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("parse error at line {line}, column '{column}': {msg}")]
    Parse {
        line: usize,
        column: String,
        msg: String,
    },

    #[error("input file has no data rows")]
    EmptyFile,

    #[error("column '{column}' has negative value at row {row}")]
    NegativeValue { column: String, row: usize },

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("no predictors left after preprocessing")]
    PipelineEmpty,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
