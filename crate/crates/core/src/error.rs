use thiserror::Error;

/// Everything that can go wrong while fitting curves, summarizing surveys,
/// or evaluating plans.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("no convergence constant satisfies tolerance: {0}")]
    ConvergenceFailure(String),

    #[error("no matching survey records for plan `{plan_id}`, attribute `{attribute_id}`")]
    EmptyDataset { plan_id: String, attribute_id: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("sampling exhausted: {0}")]
    SamplingExhausted(String),

    #[error("parse error at row {row}, column `{column}`: {reason}")]
    Parse {
        row: u64,
        column: String,
        reason: String,
    },

    #[error("schema error at `{path}`: {reason}")]
    Schema { path: String, reason: String },

    /// A fit or evaluation failure attributed to a specific attribute.
    #[error("attribute `{attribute_id}`: {source}")]
    Attribute {
        attribute_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn constraint(msg: impl Into<String>) -> Self {
        Error::ConstraintViolation(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Wraps an error with the attribute it arose from.
    pub fn for_attribute(self, attribute_id: &str) -> Self {
        match self {
            already @ Error::Attribute { .. } => already,
            other => Error::Attribute {
                attribute_id: attribute_id.to_string(),
                source: Box::new(other),
            },
        }
    }

    /// The innermost error, looking through attribute labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Attribute { source, .. } => source.root(),
            other => other,
        }
    }

    /// Attribute label, if any.
    pub fn attribute(&self) -> Option<&str> {
        match self {
            Error::Attribute { attribute_id, .. } => Some(attribute_id),
            _ => None,
        }
    }

    /// Bad user input (as opposed to an internal bug).
    pub fn is_validation(&self) -> bool {
        !matches!(self.root(), Error::Internal(_))
    }

    /// Failures of the numerical machinery, or any failure attributed to a
    /// specific attribute's fit.
    pub fn is_fit_failure(&self) -> bool {
        matches!(self, Error::Attribute { .. })
            || matches!(
                self.root(),
                Error::ConvergenceFailure(_) | Error::SamplingExhausted(_)
            )
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self.root() {
            Error::Domain(_) => "domain_error",
            Error::ConstraintViolation(_) => "constraint_violation",
            Error::ConvergenceFailure(_) => "convergence_failure",
            Error::EmptyDataset { .. } => "empty_dataset",
            Error::Validation(_) => "validation_error",
            Error::DegenerateScenario(_) => "degenerate_scenario",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::SamplingExhausted(_) => "sampling_exhausted",
            Error::Parse { .. } => "parse_error",
            Error::Schema { .. } => "schema_error",
            Error::NotFound(_) => "not_found",
            Error::Io(_) => "io_error",
            Error::Internal(_) | Error::Attribute { .. } => "internal_error",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
