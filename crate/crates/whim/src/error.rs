use std::path::PathBuf;

use whim_core::ErrorClass;

/// Errors of the std layer: engine errors plus IO, parsing and config.
#[derive(Debug, thiserror::Error)]
pub enum WhimError {
    #[error(transparent)]
    Core(#[from] whim_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset exceeds the row limit of {0}")]
    TooManyRows(usize),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = WhimError> = std::result::Result<T, E>;

impl WhimError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        WhimError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            WhimError::Core(e) => e.class(),
            WhimError::Config(_) | WhimError::Usage(_) => ErrorClass::Usage,
            WhimError::Io { .. } | WhimError::Csv(_) | WhimError::TooManyRows(_) | WhimError::Json(_) => {
                ErrorClass::Data
            }
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            WhimError::Core(e) => e.code(),
            WhimError::Io { .. } => "io_error",
            WhimError::Csv(_) => "csv_error",
            WhimError::TooManyRows(_) => "too_many_rows",
            WhimError::Json(_) => "invalid_json",
            WhimError::Config(_) => "invalid_config",
            WhimError::Usage(_) => "usage",
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> u8 {
        match self.class() {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Numerical => 3,
        }
    }
}
