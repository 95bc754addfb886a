use alloc::string::String;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong inside the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("ingestion error at row {row}: {message}")]
    Ingest { row: usize, message: String },
    #[error("dataset has no data rows")]
    NoRows,
    #[error("invalid column name: {0}")]
    InvalidColumnName(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("value `{value}` does not belong to column `{column}`")]
    UnknownValue { column: String, value: String },
    #[error("column `{0}` is not numeric")]
    NotNumeric(String),
    #[error("column `{0}` has no non-missing values")]
    AllMissing(String),
    #[error("all metric cells are missing in the selection")]
    EmptySelection,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("scenario infeasible: {0}")]
    Infeasible(String),
    #[error("degenerate distribution: sample is constant")]
    Degenerate,
    #[error("empty sample")]
    EmptySample,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Coarse classification used for exit codes and HTTP status mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Caller passed something that is not valid for the request.
    Usage,
    /// The data cannot support the request.
    Data,
    /// A numerical routine failed.
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::UnknownColumn(_)
            | Error::UnknownValue { .. }
            | Error::InvalidArgument(_) => ErrorClass::Usage,
            Error::Numerical(_) => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Ingest { .. } => "ingest_error",
            Error::NoRows => "no_rows",
            Error::InvalidColumnName(_) => "invalid_column_name",
            Error::UnknownColumn(_) => "unknown_column",
            Error::UnknownValue { .. } => "unknown_value",
            Error::NotNumeric(_) => "not_numeric",
            Error::AllMissing(_) => "all_missing",
            Error::EmptySelection => "empty_selection",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Infeasible(_) => "infeasible_scenario",
            Error::Degenerate => "degenerate_distribution",
            Error::EmptySample => "empty_sample",
            Error::Numerical(_) => "numerical_failure",
        }
    }
}
