//! Fidelity and the statistical distance `d = 2·arccos √T` between
//! distributions, with the contraction check for stochastic maps.
//!
//! For discrete laws `T(p, q) = (Σ √(p_i q_i))²`; for normal densities the
//! overlap integral has a closed form. The distance is a metric bounded by π;
//! permutations preserve it and stochastic matrices never increase it.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::distributions::{gaussian_fidelity, Gaussian1D};
use crate::error::{Error, Result};
use crate::tpm::{check_probability_vector, TransitionMatrix};

/// Tolerance slack for the contraction inequality.
pub const CONTRACTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist(Vec<f64>);

impl DiscreteDist {
    /// Requires nonnegative entries summing to one within `1e-12`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probability_vector(&probs, probs.len(), 1e-12)?;
        Ok(Self(probs))
    }

    /// Normalizes nonnegative weights with positive total.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::NotAProbabilityVector(format!(
                "weight {w} is not finite and nonnegative"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::NotAProbabilityVector("weights sum to zero".into()));
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Laws between which a fidelity, and hence the statistical distance, is defined.
pub trait StatisticalDistance {
    fn fidelity(&self, other: &Self) -> Result<f64>;

    /// `2·arccos √T`, in `[0, π]`.
    fn distance(&self, other: &Self) -> Result<f64> {
        let t = self.fidelity(other)?.clamp(0.0, 1.0);
        Ok(2.0 * t.sqrt().acos())
    }
}

impl StatisticalDistance for DiscreteDist {
    fn fidelity(&self, other: &Self) -> Result<f64> {
        overlap_discrete(self, other)
    }

    // With unit mass, 1 - Σ√(p q) = ½ Σ (√p - √q)², so arccos of the overlap
    // equals 2·asin(√(H²/2)). This form stays accurate (and exactly zero) as p → q.
    fn distance(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let h2: f64 = 0.5
            * self
                .0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
                .sum::<f64>();
        Ok((4.0 * (0.5 * h2).sqrt().min(FRAC_1_SQRT_2).asin()).min(PI))
    }
}

impl StatisticalDistance for Gaussian1D {
    fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(gaussian_fidelity(self, other))
    }
}

/// `(Σ √(p_i q_i))²`; terms with `p_i q_i = 0` contribute nothing.
pub fn overlap_discrete(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    let bc: f64 =
        p.0.iter()
            .zip(&q.0)
            .map(|(a, b)| a * b)
            .filter(|&ab| ab > 0.0)
            .map(f64::sqrt)
            .sum();
    Ok((bc * bc).clamp(0.0, 1.0))
}

/// Statistical distance `2·arccos √T`, in `[0, π]`.
pub fn distance<D: StatisticalDistance>(a: &D, b: &D) -> Result<f64> {
    a.distance(b)
}

/// Image of `p` under the stochastic map `m` (row vector times matrix).
pub fn apply_stochastic_map(p: &DiscreteDist, m: &TransitionMatrix) -> Result<DiscreteDist> {
    let image = m.apply(&p.0)?;
    DiscreteDist::normalized(image)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionReport {
    pub d_before: f64,
    pub d_after: f64,
    pub holds: bool,
}

/// Compares `d(p, q)` with `d(pM, qM)`.
pub fn check_contraction(p: &DiscreteDist, q: &DiscreteDist, m: &TransitionMatrix) -> Result<ContractionReport> {
    let d_before = distance(p, q)?;
    let d_after = distance(&apply_stochastic_map(p, m)?, &apply_stochastic_map(q, m)?)?;
    Ok(ContractionReport {
        d_before,
        d_after,
        holds: d_after <= d_before + CONTRACTION_TOL,
    })
}
