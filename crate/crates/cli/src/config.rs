//! Study configuration: a single JSON document, unknown keys rejected.

use std::path::PathBuf;

use serde::Deserialize;

use mchain_core::state_space::{DEFAULT_K_SIGMA, DEFAULT_N_INTERIOR};
use mchain_core::{Mode, StageMoments};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub stages: Vec<StageEntry>,
    #[serde(default)]
    pub discretization: Discretization,
    pub allowable: Option<f64>,
    #[serde(default)]
    pub mode: ModeName,
    pub validate: Option<ValidateBlock>,
    pub stationary: Option<StationaryBlock>,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageEntry {
    pub mu: f64,
    pub sigma: Sigma,
    pub rho_next: Option<Correlation>,
}

/// A standard deviation; zero and negative values are rejected while parsing.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(try_from = "f64")]
pub struct Sigma(pub f64);

impl TryFrom<f64> for Sigma {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        if v > 0.0 && v.is_finite() {
            Ok(Self(v))
        } else {
            Err(format!("sigma must be > 0, got {v}"))
        }
    }
}

/// A correlation coefficient in `[-1, 1]`. Values too close to ±1 parse but
/// are rejected later as numerically degenerate.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(try_from = "f64")]
pub struct Correlation(pub f64);

impl TryFrom<f64> for Correlation {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        if (-1.0..=1.0).contains(&v) {
            Ok(Self(v))
        } else {
            Err(format!("correlation must lie in [-1, 1], got {v}"))
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub n_interior: Option<usize>,
    pub k_sigma: Option<f64>,
    pub boundaries: Option<Vec<f64>>,
}

pub enum Binning {
    Auto { n_interior: usize, k_sigma: f64 },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Instantaneous,
    #[default]
    Absorbing,
}

impl From<ModeName> for Mode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Instantaneous => Mode::Instantaneous,
            ModeName::Absorbing => Mode::Absorbing,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateBlock {
    pub n_paths: usize,
    pub seed: u64,
    /// Replaces the lag-one correlations of the analytic chain only; the
    /// simulation keeps the configured values.
    pub analytic_rho_override: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryBlock {
    /// Lag-one self-correlation of a homogeneous chain built from the single stage.
    pub rho: Option<Correlation>,
    /// An explicit transition matrix, used as given.
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: Option<PathBuf>,
    pub profile_csv: Option<String>,
    pub stationary_csv: Option<String>,
    pub validation_csv: Option<String>,
    pub report: Option<String>,
}

impl StudyConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: StudyConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path.is_empty() || path == "." {
                CliError::Config(inner.to_string())
            } else {
                CliError::Config(format!("{path}: {inner}{}", stage_suffix(&path)))
            }
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let n = self.stages.len();
        for (i, s) in self.stages.iter().enumerate() {
            if !s.mu.is_finite() {
                return Err(CliError::Config(format!(
                    "stages[{i}].mu: must be finite (stage {})",
                    i + 1
                )));
            }
            match (s.rho_next, i + 1 == n) {
                (None, false) => {
                    return Err(CliError::Config(format!(
                        "stages[{i}].rho_next: required on every stage except the last (stage {})",
                        i + 1
                    )))
                }
                (Some(_), true) => {
                    return Err(CliError::Config(format!(
                        "stages[{i}].rho_next: must be absent on the last stage (stage {})",
                        i + 1
                    )))
                }
                _ => {}
            }
        }
        let d = &self.discretization;
        if d.boundaries.is_some() && (d.n_interior.is_some() || d.k_sigma.is_some()) {
            return Err(CliError::Config(
                "discretization: give either `boundaries` or `n_interior`/`k_sigma`, not both".into(),
            ));
        }
        if d.n_interior == Some(0) {
            return Err(CliError::Config("discretization.n_interior: must be at least 1".into()));
        }
        if let Some(k) = d.k_sigma {
            if !(k > 0.0 && k.is_finite()) {
                return Err(CliError::Config(format!(
                    "discretization.k_sigma: must be > 0, got {k}"
                )));
            }
        }
        if let Some(b) = &d.boundaries {
            if let Some(w) = b.windows(2).position(|w| w[0] >= w[1]) {
                return Err(CliError::Config(format!(
                    "discretization.boundaries[{}]: boundaries must be strictly increasing",
                    w + 1
                )));
            }
        }
        if let Some(a) = self.allowable {
            if !a.is_finite() {
                return Err(CliError::Config("allowable: must be finite".into()));
            }
        }
        if let Some(v) = &self.validate {
            if v.n_paths == 0 {
                return Err(CliError::Config("validate.n_paths: must be at least 1".into()));
            }
            if let Some(o) = &v.analytic_rho_override {
                if o.len() + 1 != n {
                    return Err(CliError::Config(format!(
                        "validate.analytic_rho_override: expected {} values, got {}",
                        n.saturating_sub(1),
                        o.len()
                    )));
                }
            }
        }
        if let Some(s) = &self.stationary {
            match (&s.rho, &s.matrix) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(CliError::Config(
                        "stationary: give exactly one of `rho` or `matrix`".into(),
                    ))
                }
                (Some(_), None) if n != 1 => {
                    return Err(CliError::Config(format!(
                        "stationary.rho: a homogeneous chain needs exactly one stage, got {n}"
                    )))
                }
                _ => {}
            }
        } else if n == 0 {
            return Err(CliError::Config("stages: at least one stage is required".into()));
        }
        Ok(())
    }

    pub fn stage_moments(&self) -> Result<Vec<StageMoments>, CliError> {
        if self.stages.is_empty() {
            return Err(CliError::Config("stages: at least one stage is required".into()));
        }
        self.stages
            .iter()
            .map(|s| StageMoments::new(s.mu, s.sigma.0, s.rho_next.map(|r| r.0)))
            .collect::<Result<_, _>>()
            .map_err(CliError::from)
    }

    pub fn binning(&self) -> Binning {
        let d = &self.discretization;
        match &d.boundaries {
            Some(b) => Binning::Explicit(b.clone()),
            None => Binning::Auto {
                n_interior: d.n_interior.unwrap_or(DEFAULT_N_INTERIOR),
                k_sigma: d.k_sigma.unwrap_or(DEFAULT_K_SIGMA),
            },
        }
    }
}

fn stage_suffix(path: &str) -> String {
    path.strip_prefix("stages[")
        .and_then(|rest| rest.split(']').next())
        .and_then(|i| i.parse::<usize>().ok())
        .map_or_else(String::new, |i| format!(" (stage {})", i + 1))
}
