use thiserror::Error;

/// Failures of a run, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or scenario input; exit code 2.
    #[error("validation error: {0}")]
    Validation(String),
    /// A bound or oracle failed while evaluating; exit code 3.
    #[error("evaluation error in {op}: {message}")]
    Evaluation { op: String, message: String },
    /// Results could not be written; exit code 3.
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Evaluation { .. } | CliError::Output(_) => 3,
        }
    }

    pub(crate) fn eval(op: impl Into<String>, e: impl std::fmt::Display) -> Self {
        CliError::Evaluation {
            op: op.into(),
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
