use std::fmt;

/// Non-fatal numerical events surfaced to the caller.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A raw TPM row deviated from unit sum by more than the quadrature tolerance.
    RowNormalization { step: usize, row: usize, deviation: f64 },
    /// A TPM row whose conditioning state carries (numerically) no mass; set to a point mass.
    PointMassRow { step: usize, row: usize, mass: f64 },
    /// A tail bin with no mass under the reference marginal; representative set by fallback.
    TailRepresentativeFallback { bin: usize, value: f64 },
    /// The coefficient of variation is undefined at this stage (zero mean).
    CovUndefined { stage: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::RowNormalization { step, row, deviation } => write!(
                f,
                "step {step}, row {row}: raw row sum deviates from 1 by {deviation:.3e} before normalization"
            ),
            Warning::PointMassRow { step, row, mass } => write!(
                f,
                "step {step}, row {row}: conditioning mass {mass:.3e} below 1e-14; row set to a point mass"
            ),
            Warning::TailRepresentativeFallback { bin, value } => write!(
                f,
                "bin {bin}: tail carries no mass under the reference marginal; representative set to {value}"
            ),
            Warning::CovUndefined { stage } => {
                write!(f, "stage {stage}: safe-state mean is zero; cov undefined")
            }
        }
    }
}
