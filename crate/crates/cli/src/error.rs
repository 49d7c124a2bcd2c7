use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Failures of a subcommand, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Arguments that parse but do not make sense together.
    #[error("invalid arguments: {0}")]
    Usage(String),

    /// Unreadable or malformed input files.
    #[error("input error: {0}")]
    Input(String),

    /// Well-formed input that violates an operation's requirements.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) | CliError::Io { .. } => 3,
            CliError::Precondition(_) => 4,
        }
    }

    pub fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }
}

impl From<ultrametric::Error> for CliError {
    fn from(e: ultrametric::Error) -> Self {
        use ultrametric::Error as E;
        match e {
            E::Parse(_) | E::InvalidMatrix(_) | E::InvalidDendrogram(_) | E::DimensionMismatch(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Precondition(e.to_string()),
        }
    }
}
