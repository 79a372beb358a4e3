use aot_core::CoreError;
use aot_generators::GeneratorError;
use aot_solvers::SolverError;
use aot_stopping::StoppingError;
use thiserror::Error;

/// Failures of a CLI invocation, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// File or stream I/O, or an unparsable input file (exit 1).
    #[error("i/o error: {0}")]
    Io(String),
    /// Invalid parameters or an invalid tree (exit 2).
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    /// A solver failed on valid input (exit 3).
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(vec![msg.into()])
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

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidTree(v) => CliError::Validation(v),
            CoreError::Json(m) => CliError::Io(format!("json: {m}")),
            other => CliError::invalid(other.to_string()),
        }
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::Core(c) => c.into(),
            other => CliError::invalid(other.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Core(c) => c.into(),
            SolverError::TooLarge { .. } | SolverError::BadOrder(_) | SolverError::Coupling(_) => {
                CliError::invalid(e.to_string())
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<StoppingError> for CliError {
    fn from(e: StoppingError) -> Self {
        match e {
            StoppingError::Core(c) => c.into(),
            other => CliError::invalid(other.to_string()),
        }
    }
}
