use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{function}: argument {value} outside the domain ({expected})")]
    Domain {
        function: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("singular or non-positive-definite matrix: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error(
        "nuisance estimate does not solve the score equations (score norm {score_norm:e}, tolerance {tolerance:e})"
    )]
    NotAtMle { score_norm: f64, tolerance: f64 },

    #[error("{solver} failed to converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, value: impl Into<f64>, expected: &'static str) -> Self {
        Error::Domain {
            function,
            value: value.into(),
            expected,
        }
    }

    /// True for errors caused by the optimizer rather than the input data.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(self, Error::NotConverged { .. } | Error::NotAtMle { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
