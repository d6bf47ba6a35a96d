use crate::distributions::{Gaussian1D, Gaussian2D};
use crate::error::{Error, Result};

/// Response moments at one loading stage: mean, standard deviation and the
/// lag-one correlation with the following stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageMoments {
    pub mu: f64,
    pub sigma: f64,
    pub rho_next: Option<f64>,
}

impl StageMoments {
    pub fn new(mu: f64, sigma: f64, rho_next: Option<f64>) -> Result<Self> {
        Gaussian1D::new(mu, sigma)?;
        if let Some(rho) = rho_next {
            if !(-1.0..=1.0).contains(&rho) {
                return Err(Error::invalid("rho_next", format!("must lie in [-1, 1], got {rho}")));
            }
        }
        Ok(Self { mu, sigma, rho_next })
    }

    pub fn last(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(mu, sigma, None)
    }

    pub fn marginal(&self) -> Result<Gaussian1D> {
        Gaussian1D::new(self.mu, self.sigma)
    }

    /// Joint law of this stage and `next`, using this stage's `rho_next`.
    pub fn joint_with(&self, next: &StageMoments) -> Result<Gaussian2D> {
        let rho = self
            .rho_next
            .ok_or_else(|| Error::invalid("rho_next", "missing on a stage that has a successor"))?;
        Gaussian2D::new(self.marginal()?, next.marginal()?, rho)
    }
}

/// Checks a stage sequence: non-empty, `rho_next` present on every stage but the last.
pub fn validate_stages(stages: &[StageMoments]) -> Result<()> {
    if stages.is_empty() {
        return Err(Error::EmptyStages);
    }
    for (k, s) in stages.iter().enumerate() {
        StageMoments::new(s.mu, s.sigma, s.rho_next)?;
        let is_last = k + 1 == stages.len();
        match (s.rho_next, is_last) {
            (None, false) => return Err(Error::invalid("rho_next", format!("missing on stage {}", k + 1))),
            (Some(_), true) => return Err(Error::invalid("rho_next", "must be absent on the last stage")),
            _ => {}
        }
    }
    Ok(())
}
