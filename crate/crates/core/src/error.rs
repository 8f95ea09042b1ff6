use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {source_name} at line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Cholesky (or other) factorization failed; `condition` is an
    /// eigenvalue-ratio estimate of the offending matrix.
    #[error("factorization of {what} failed (condition estimate {condition:.3e})")]
    Factorization { what: String, condition: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("point outside the box: {0}")]
    OutsideBox(String),

    #[error("empty chain")]
    EmptyChain,

    #[error("undefined magnitude: no subfault slip at or above {floor} m")]
    UndefinedMagnitude { floor: f64 },

    #[error("did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    /// Short machine-friendly kind name, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Shape(_) => "shape",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Factorization { .. } => "factorization",
            Error::Eigen(_) => "eigen",
            Error::OutsideBox(_) => "outside_box",
            Error::EmptyChain => "empty_chain",
            Error::UndefinedMagnitude { .. } => "undefined_magnitude",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Io(_) => "io",
        }
    }
}
