use thiserror::Error;

use crate::strong::ConditionReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("step size dt = {dt:e} is unstable for rk4 (spectral radius estimate {radius:e}); try dt <= {suggested:e}")]
    StepSize { dt: f64, radius: f64, suggested: f64 },

    #[error("no certificate: {0}")]
    NoCertificate(String),

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("operator conditions fail: {reason}")]
    ConditionFailure {
        reason: String,
        report: Option<Box<ConditionReport>>,
    },

    #[error("condition (p+1)/(p-1) < lambda_1/|c| violated for p = {p}; admissible p > {lower}")]
    InvalidP { p: f64, lower: f64 },

    #[error("coupling too strong: {message} (admissible threshold {threshold:e})")]
    CouplingTooStrong { message: String, threshold: f64 },

    #[error("construction failed: {0}")]
    ConstructionFailed(String),

    #[error("parameter regime error: {0}")]
    Regime(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of a numerical kernel rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotConverged { .. } | Error::StepSize { .. })
    }

    /// True when the inputs were fine but no decay certificate exists.
    pub fn is_certification(&self) -> bool {
        matches!(
            self,
            Error::NoCertificate(_)
                | Error::InvalidP { .. }
                | Error::CouplingTooStrong { .. }
                | Error::ConditionFailure { .. }
        )
    }
}
