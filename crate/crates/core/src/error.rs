use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid instance: {}", join(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("infeasible decision: {}", join(.0))]
    Infeasible(Vec<Violation>),

    #[error("no plan supplied for scenario {0}")]
    MissingPlan(usize),

    #[error("enumeration needs more than {limit} states")]
    EnumerationLimit { limit: u64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("mps line {line}: {message}")]
    Mps { line: usize, message: String },

    #[error("unsupported mps section {0}")]
    UnsupportedMpsSection(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable identifier used in machine-readable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension_mismatch",
            Error::InvalidInstance(_) => "invalid_instance",
            Error::Infeasible(_) => "infeasible_decision",
            Error::MissingPlan(_) => "missing_plan",
            Error::EnumerationLimit { .. } => "enumeration_limit",
            Error::Parse { .. } => "parse_error",
            Error::Mps { .. } => "mps_error",
            Error::UnsupportedMpsSection(_) => "unsupported_mps_section",
            Error::Solver(_) => "solver_failure",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Internal(_) => "internal_error",
            Error::Io(_) => "io_error",
        }
    }
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
