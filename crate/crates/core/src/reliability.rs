//! State-probability propagation, response statistics and failure probability.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::state_space::AggregationMap;
use crate::tpm::{check_probability_vector, ChainModel};
use crate::warning::Warning;

const DIST_TOL: f64 = 1e-9;

/// How the failure aggregate is treated during propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Matrices used as built: `Pf(Y_k)` is the probability of being in failure at stage `k`.
    Instantaneous,
    /// Failure states are traps: `Pf(Y_k)` is the probability of having entered failure by stage `k`.
    #[default]
    Absorbing,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Instantaneous => "instantaneous",
            Mode::Absorbing => "absorbing",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "instantaneous" => Ok(Mode::Instantaneous),
            "absorbing" | "first-passage" => Ok(Mode::Absorbing),
            other => Err(Error::invalid(
                "mode",
                format!("expected `instantaneous` or `absorbing`, got `{other}`"),
            )),
        }
    }
}

/// Unconditional state probabilities at one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageDistribution {
    stage: usize,
    probs: Vec<f64>,
}

impl StageDistribution {
    pub fn new(stage: usize, probs: Vec<f64>) -> Result<Self> {
        check_probability_vector(&probs, probs.len(), DIST_TOL)?;
        Ok(Self { stage, probs })
    }

    /// 1-based stage number.
    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Distribution at stage `k` (1-based): `initial · P_1 ⋯ P_{k-1}`.
pub fn state_probabilities(chain: &ChainModel, k: usize) -> Result<StageDistribution> {
    if k < 1 || k > chain.n_stages() {
        return Err(Error::IndexOutOfRange {
            what: "stage",
            index: k,
            lo: 1,
            hi: chain.n_stages(),
        });
    }
    let mut v = chain.initial_probs().to_vec();
    for m in &chain.step_matrices()[..k - 1] {
        v = m.apply(&v)?;
    }
    StageDistribution::new(k, v)
}

/// Which states enter the moment sums.
#[derive(Debug, Clone, Copy)]
pub enum StatScope<'a> {
    All,
    /// Safe states, weighted by their unconditional probabilities.
    Safe(&'a AggregationMap),
    /// Safe states, renormalized to the safe mass.
    SafeConditional(&'a AggregationMap),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseStats {
    pub mean: f64,
    pub sd: f64,
    pub cov: f64,
}

/// Mean and standard deviation of the response over `scope`.
pub fn response_moments(dist: &StageDistribution, reps: &[f64], scope: StatScope<'_>) -> Result<(f64, f64)> {
    let p = dist.probs();
    if reps.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: reps.len(),
        });
    }
    let (states, conditional) = match scope {
        StatScope::All => (0..p.len(), false),
        StatScope::Safe(map) => (check_map(map, p.len())?.safe_states(), false),
        StatScope::SafeConditional(map) => (check_map(map, p.len())?.safe_states(), true),
    };
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in states {
        m0 += p[i];
        m1 += reps[i] * p[i];
        m2 += reps[i] * reps[i] * p[i];
    }
    if conditional {
        if m0 <= 0.0 {
            return Err(Error::NotAProbabilityVector("safe states carry no probability".into()));
        }
        m1 /= m0;
        m2 /= m0;
    }
    let var = m2 - m1 * m1;
    let var = if var >= -1e-12 { var.max(0.0) } else { var };
    Ok((m1, var.sqrt()))
}

/// Mean, standard deviation and coefficient of variation of the response.
pub fn response_stats(dist: &StageDistribution, reps: &[f64], scope: StatScope<'_>) -> Result<ResponseStats> {
    let (mean, sd) = response_moments(dist, reps, scope)?;
    if mean.abs() <= 1e-300 {
        return Err(Error::CovUndefined);
    }
    Ok(ResponseStats {
        mean,
        sd,
        cov: sd / mean,
    })
}

fn check_map(map: &AggregationMap, n: usize) -> Result<&AggregationMap> {
    if map.n_states() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: map.n_states(),
        });
    }
    Ok(map)
}

/// Probability mass of the failure aggregate.
pub fn failure_probability(dist: &StageDistribution, map: &AggregationMap) -> Result<f64> {
    let p = dist.probs();
    check_map(map, p.len())?;
    let pf: f64 = map.failure_states().map(|i| p[i]).sum();
    Ok(pf.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReliability {
    pub stage: usize,
    pub pf: f64,
    pub safe_mean: f64,
    pub safe_sd: f64,
    /// `None` when the safe mean is zero.
    pub safe_cov: Option<f64>,
    pub distribution: StageDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityProfile {
    pub mode: Mode,
    pub stages: Vec<StageReliability>,
    pub warnings: Vec<Warning>,
}

impl ReliabilityProfile {
    pub fn pf(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.pf).collect()
    }
}

/// Failure probability and safe-state statistics at every stage.
pub fn reliability_profile(chain: &ChainModel, map: &AggregationMap, mode: Mode) -> Result<ReliabilityProfile> {
    let n = chain.space().n_states();
    check_map(map, n)?;
    let reps = chain.space().representatives();
    let mut warnings = Vec::new();
    let mut stages = Vec::with_capacity(chain.n_stages());
    let mut v = chain.initial_probs().to_vec();
    for k in 1..=chain.n_stages() {
        if k > 1 {
            let step = chain.step(k - 1)?;
            v = match mode {
                Mode::Instantaneous => step.apply(&v)?,
                Mode::Absorbing => step.with_absorbing(map.failure_states()).apply(&v)?,
            };
        }
        let dist = StageDistribution::new(k, v.clone())?;
        let pf = failure_probability(&dist, map)?;
        let (safe_mean, safe_sd) = response_moments(&dist, reps, StatScope::Safe(map))?;
        let safe_cov = if safe_mean.abs() > 1e-300 {
            Some(safe_sd / safe_mean)
        } else {
            warnings.push(Warning::CovUndefined { stage: k });
            None
        };
        stages.push(StageReliability {
            stage: k,
            pf,
            safe_mean,
            safe_sd,
            safe_cov,
            distribution: dist,
        });
    }
    Ok(ReliabilityProfile { mode, stages, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Gaussian1D;
    use crate::state_space::{aggregate, StateSpace};

    fn worked() -> (StageDistribution, Vec<f64>) {
        (
            StageDistribution::new(1, vec![0.2, 0.5, 0.3]).unwrap(),
            vec![1.0, 2.0, 3.0],
        )
    }

    fn three_state_map() -> AggregationMap {
        let space = StateSpace::from_boundaries(vec![1.5, 2.5], Gaussian1D::standard()).unwrap();
        aggregate(&space, 2.5).unwrap().1
    }

    #[test]
    fn worked_example_statistics() {
        let (d, reps) = worked();
        let s = response_stats(&d, &reps, StatScope::All).unwrap();
        assert!((s.mean - 2.1).abs() < 1e-14);
        assert!((s.sd - 0.7).abs() < 1e-14);
        assert!((s.cov - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn point_mass_has_zero_sd() {
        let d = StageDistribution::new(1, vec![0.0, 1.0, 0.0]).unwrap();
        let s = response_stats(&d, &[1.0, 2.0, 3.0], StatScope::All).unwrap();
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.mean, 2.0);
    }

    #[test]
    fn safe_only_uses_unconditional_weights() {
        let (d, reps) = worked();
        let map = three_state_map();
        assert_eq!(map.safe_states(), 0..2);
        let (mean, _) = response_moments(&d, &reps, StatScope::Safe(&map)).unwrap();
        assert!((mean - 1.2).abs() < 1e-15);
        let (cmean, _) = response_moments(&d, &reps, StatScope::SafeConditional(&map)).unwrap();
        assert!((cmean - 1.2 / 0.7).abs() < 1e-15);
    }

    #[test]
    fn zero_mean_cov_is_an_error() {
        let d = StageDistribution::new(1, vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            response_stats(&d, &[-1.0, 1.0], StatScope::All),
            Err(Error::CovUndefined)
        ));
    }

    #[test]
    fn failure_probability_examples() {
        let map = three_state_map();
        let d = StageDistribution::new(1, vec![0.3, 0.5, 0.2]).unwrap();
        assert!((failure_probability(&d, &map).unwrap() - 0.2).abs() < 1e-15);
        let d = StageDistribution::new(1, vec![0.3, 0.7, 0.0]).unwrap();
        assert_eq!(failure_probability(&d, &map).unwrap(), 0.0);
        let space = StateSpace::from_boundaries(vec![1.5, 2.5], Gaussian1D::standard()).unwrap();
        let (_, none_safe) = aggregate(&space, 1.5).unwrap();
        let d = StageDistribution::new(1, vec![0.0, 0.4, 0.6]).unwrap();
        assert_eq!(failure_probability(&d, &none_safe).unwrap(), 1.0);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("absorbing".parse::<Mode>().unwrap(), Mode::Absorbing);
        assert_eq!("instantaneous".parse::<Mode>().unwrap(), Mode::Instantaneous);
        assert!("sometimes".parse::<Mode>().is_err());
        assert_eq!(Mode::default(), Mode::Absorbing);
    }
}
