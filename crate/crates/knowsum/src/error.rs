use std::path::PathBuf;

/// Errors surfaced by file handling and the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] knowsum_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{}:{line}: {message}", path.display())]
    Validation { path: PathBuf, line: u64, message: String },
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Machine-readable error category.
    pub fn kind(&self) -> &'static str {
        use knowsum_core::Error as C;
        match self {
            Error::Core(C::InvalidConfig(_)) => "config",
            Error::Core(C::InvalidInput(_)) => "invalid_input",
            Error::Core(C::EmptyInput(_)) => "empty_input",
            Error::Core(C::Split(_)) => "split",
            Error::Core(C::NumericRange(_)) => "numeric_range",
            Error::Core(C::MissingVector(_)) => "missing_vector",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "invalid_input",
            Error::Usage(_) => "usage",
            Error::Config(_) => "config",
            Error::Json(_) => "json",
        }
    }

    /// 1 for computation and data errors, 2 for usage and configuration errors.
    pub fn exit_code(&self) -> i32 {
        use knowsum_core::Error as C;
        match self {
            Error::Usage(_) | Error::Config(_) | Error::Io { .. } => 2,
            Error::Core(C::InvalidConfig(_) | C::Split(_)) => 2,
            _ => 1,
        }
    }
}
