use thiserror::Error;

/// Failure classes of the command-line tool, one per exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    /// 1 config/parse, 2 I/O, 3 non-convergence, 4 failed validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl From<sbm_core::Error> for CliError {
    fn from(e: sbm_core::Error) -> Self {
        use sbm_core::Error as E;
        match e {
            E::NonConvergence { .. }
            | E::Overflow { .. }
            | E::SingularSystem { .. }
            | E::Bracket { .. }
            | E::HorizonExceeded { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
