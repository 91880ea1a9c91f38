use thiserror::Error;

/// Errors raised by the moment series, estimator constructors, and risk evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `E[U^order]` diverges for the given degrees of freedom.
    #[error("E[U^{order}] is not integrable for p = {dof} (requires p/2 + {order} > 0)")]
    NonIntegrable { dof: usize, order: f64 },

    #[error("series not converged after {max_terms} terms (partial sum {partial_sum:e})")]
    TruncationFailure { max_terms: usize, partial_sum: f64 },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("{family} requires p > {threshold}, got p = {p}")]
    DimensionTooSmall {
        family: &'static str,
        threshold: usize,
        p: usize,
    },

    #[error("shrinkage factor is undefined at ||x||^2 = 0")]
    SingularObservation,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("chained risk formula for degree {degree} assumes THEOREM lower-order coefficients")]
    ConventionUnsupported { degree: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
