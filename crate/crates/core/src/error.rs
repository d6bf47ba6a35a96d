use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("NaN input to {0}")]
    NanInput(&'static str),

    #[error("degenerate interval [{lo}, {hi}): lower limit must be below upper limit")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("degenerate correlation rho = {rho}: |rho| must be below 1 - 1e-9")]
    DegenerateCorrelation { rho: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} index {index} out of range (valid: {lo}..={hi})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        lo: usize,
        hi: usize,
    },

    #[error("stage list is empty")]
    EmptyStages,

    #[error("allowable response {allowable} lies outside the finite span [{lo}, {hi}]")]
    AllowableOutOfSpan { allowable: f64, lo: f64, hi: f64 },

    #[error("coefficient of variation undefined: mean response is zero")]
    CovUndefined,

    #[error("chain is not ergodic: stationary vector is not unique ({null_dim} near-zero singular values)")]
    NonErgodic { null_dim: usize },

    #[error("not a probability vector: {0}")]
    NotAProbabilityVector(String),

    #[error("not a row-stochastic matrix: {0}")]
    NotStochastic(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to malformed input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateCorrelation { .. } | Error::NonErgodic { .. } | Error::Quadrature(_) | Error::CovUndefined
        )
    }
}
