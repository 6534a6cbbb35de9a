use thiserror::Error;

/// Errors shared by the exact and floating-point engines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument is outside the declared domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operator scale does not dominate the growth rate of the input,
    /// so the inner integrals diverge.
    #[error("divergent integral: scale n = {scale} must exceed growth rate {rate}")]
    DivergentIntegral { scale: f64, rate: f64 },

    /// The outer series could not be truncated within the term budget.
    /// Carries the partial value accumulated so far.
    #[error("truncation failure after {terms} terms (partial value {partial})")]
    TruncationFailure { terms: usize, partial: f64 },

    /// The exact engine refuses rather than silently losing exactness.
    #[error("exactness limit exceeded: index {index} > {limit}")]
    Exactness { index: u64, limit: u64 },

    /// Input lies outside the class an operation is defined on.
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    /// A capability needed by the operation is missing (derivative oracle,
    /// jet order, ...).
    #[error("capability error: {0}")]
    Capability(String),

    /// The hypotheses of the identity under test do not hold for the
    /// requested parameters.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

pub type Result<T> = std::result::Result<T, Error>;
