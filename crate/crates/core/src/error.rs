use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time must be positive and finite, got {0}")]
    NonPositiveTime(f64),

    #[error("grid abscissae must be finite and strictly increasing")]
    UnsortedGrid,

    #[error("operation is only defined for eta = 0 tables (eta = {0})")]
    SkewedTable(f64),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("table does not provide {0}")]
    MissingEntry(String),

    #[error("regime precondition violated: {0}")]
    Regime(String),

    #[error("grid coverage: {0}")]
    Coverage(String),

    #[error("inconsistent table family: {0}")]
    FamilyMismatch(String),

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
