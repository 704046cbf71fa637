use thiserror::Error;

/// Errors raised by constructors and evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid distribution ({what}): {detail}")]
    InvalidDistribution { what: String, detail: String },

    #[error("alphabet '{axis}' has {size} symbols, limit is {limit}")]
    AlphabetTooLarge {
        axis: String,
        size: usize,
        limit: usize,
    },

    #[error("unknown axis '{0}'")]
    UnknownAxis(String),

    #[error("axis '{0}' used more than once")]
    OverlappingAxes(String),

    #[error("absolute continuity violated: {0}")]
    AbsoluteContinuity(String),

    #[error("indeterminate form (inf - inf) in {0}")]
    Indeterminate(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("parameters outside 0 <= rho1 < rho0 < 1: {0}")]
    Region(String),

    #[error("auxiliary receiver fails membership (factorization residual {factorization:.3e}, second residual {second:.3e})")]
    Membership { factorization: f64, second: f64 },

    #[error("construction constraint '{constraint}' violated (residual {residual:.3e})")]
    Constraint { constraint: String, residual: f64 },

    #[error("chain link {index}: {source}")]
    Link {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }

    /// True for errors caused by the caller's data rather than by evaluation.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Indeterminate(_) | Error::Evaluation(_) => false,
            Error::Link { source, .. } => source.is_input_error(),
            _ => true,
        }
    }
}
