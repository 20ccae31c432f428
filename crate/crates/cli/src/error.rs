use std::path::PathBuf;

/// Failures of the command layer, each tied to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(ctr_core::Error),
    /// An instance exceeds a search or enumeration limit.
    #[error("size guard: {0}")]
    Guard(ctr_core::Error),
}

impl From<ctr_core::Error> for CliError {
    fn from(e: ctr_core::Error) -> Self {
        match e {
            ctr_core::Error::TooLarge { .. } => CliError::Guard(e),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        CliError::Json {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Guard(_) => exit::GUARD,
            _ => exit::INPUT,
        }
    }
}

/// Exit codes shared by every subcommand.
pub mod exit {
    pub const OK: u8 = 0;
    /// I/O, parse or parameter failure.
    pub const INPUT: u8 = 1;
    /// The solver did not certify its answer, or a check failed.
    pub const NOT_CONVERGED: u8 = 2;
    /// A size guard refused the instance.
    pub const GUARD: u8 = 3;
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
