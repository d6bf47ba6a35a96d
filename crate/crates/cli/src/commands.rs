//! The four batch commands. Each writes its artifacts under the output
//! directory and returns normally on success; failures carry their exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info, warn};

use mchain_core::mc_oracle::{compare, simulate, SimulationSpec, ValidationReport, MIN_CELL_AGREEMENT};
use mchain_core::metric::{distance, DiscreteDist};
use mchain_core::reliability::{reliability_profile, response_moments, state_probabilities, StatScope};
use mchain_core::state_space::{aggregate, build_auto};
use mchain_core::tpm::{build_homogeneous_tpm, stationary, stationary_residual};
use mchain_core::{
    AggregationMap, ChainModel, Mode, ReliabilityProfile, StageMoments, StateSpace, TransitionMatrix, Warning,
};

use crate::config::{Binning, StudyConfig};
use crate::error::CliError;
use crate::format::sig12;

/// Command-line overrides shared by the study commands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
}

struct Study {
    config_path: PathBuf,
    config_text: String,
    config: StudyConfig,
    out_dir: PathBuf,
}

impl Study {
    fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let config_text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config = StudyConfig::parse(&config_text)?;
        let out_dir = overrides
            .out_dir
            .clone()
            .or_else(|| config.outputs.dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out_dir)?;
        Ok(Self {
            config_path: path.to_path_buf(),
            config_text,
            config,
            out_dir,
        })
    }

    fn output(&self, name: &Option<String>, default: &str) -> PathBuf {
        self.out_dir.join(name.as_deref().unwrap_or(default))
    }

    fn report_path(&self, default: &str) -> PathBuf {
        self.output(&self.config.outputs.report, default)
    }

    fn header(&self, title: &str) -> String {
        let mut r = String::new();
        let _ = writeln!(r, "mchain-rel {title}");
        let _ = writeln!(r, "config: {}", self.config_path.display());
        let _ = writeln!(r, "\n--- configuration ---");
        let _ = writeln!(r, "{}", self.config_text.trim_end());
        r
    }

    fn space_for(&self, stages: &[StageMoments]) -> Result<StateSpace, CliError> {
        Ok(match self.config.binning() {
            Binning::Auto { n_interior, k_sigma } => build_auto(stages, n_interior, k_sigma)?,
            Binning::Explicit(b) => StateSpace::from_boundaries(b, stages[0].marginal()?)?,
        })
    }

    /// Discretized chain for `stages`, refined at the allowable response when one is given.
    fn chain_for(&self, stages: &[StageMoments]) -> Result<(ChainModel, AggregationMap), CliError> {
        let space = self.space_for(stages)?;
        let (space, map) = match self.config.allowable {
            Some(a) => aggregate(&space, a)?,
            None => {
                let n = space.n_states();
                (space, AggregationMap::all_safe(n))
            }
        };
        Ok((ChainModel::build(stages, space)?, map))
    }
}

fn write_warnings(r: &mut String, warnings: &[Warning]) {
    let _ = writeln!(r, "\n--- warnings ({}) ---", warnings.len());
    if !warnings.is_empty() {
        warn!("{} warnings; see the report for details", warnings.len());
    }
    for w in warnings {
        debug!("{w}");
        let _ = writeln!(r, "- {w}");
    }
}

fn write_model(r: &mut String, chain: &ChainModel, map: &AggregationMap, mode: Option<Mode>) {
    let space = chain.space();
    let _ = writeln!(r, "\n--- model ---");
    let _ = writeln!(r, "stages: {}", chain.n_stages());
    let _ = writeln!(r, "states (N): {}", space.n_states());
    if let Some((lo, hi)) = space.span() {
        let _ = writeln!(r, "finite span: [{}, {}]", sig12(lo), sig12(hi));
    }
    if map.threshold().is_finite() {
        let _ = writeln!(
            r,
            "allowable: {} (safe states 1..={}, failure states {}..={})",
            sig12(map.threshold()),
            map.n_safe(),
            map.n_safe() + 1,
            map.n_states()
        );
    } else {
        let _ = writeln!(r, "allowable: none (all states safe)");
    }
    if let Some(mode) = mode {
        let _ = writeln!(r, "mode: {mode}");
    }
}

fn profile_csv(profile: &ReliabilityProfile) -> String {
    let mut csv = String::from("stage,pf,safe_mean,safe_sd,safe_cov\n");
    for s in &profile.stages {
        let cov = s.safe_cov.map_or_else(|| "NA".to_string(), sig12);
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            s.stage,
            sig12(s.pf),
            sig12(s.safe_mean),
            sig12(s.safe_sd),
            cov
        );
    }
    csv
}

fn write_profile_table(r: &mut String, chain: &ChainModel, profile: &ReliabilityProfile) -> Result<(), CliError> {
    let reps = chain.space().representatives();
    let _ = writeln!(r, "\n--- results ---");
    let _ = writeln!(r, "stage,pf,safe_mean,safe_sd,safe_cov,mean,sd");
    for s in &profile.stages {
        let (mean, sd) = response_moments(&state_probabilities(chain, s.stage)?, reps, StatScope::All)?;
        let cov = s.safe_cov.map_or_else(|| "NA".to_string(), sig12);
        let _ = writeln!(
            r,
            "{},{},{},{},{},{},{}",
            s.stage,
            sig12(s.pf),
            sig12(s.safe_mean),
            sig12(s.safe_sd),
            cov,
            sig12(mean),
            sig12(sd)
        );
    }
    Ok(())
}

pub fn run_reliability(config: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let study = Study::load(config, overrides)?;
    let mode = overrides.mode.unwrap_or_else(|| study.config.mode.into());
    let stages = study.config.stage_moments()?;
    let (chain, map) = study.chain_for(&stages)?;
    let profile = reliability_profile(&chain, &map, mode)?;

    let csv_path = study.output(&study.config.outputs.profile_csv, "profile.csv");
    fs::write(&csv_path, profile_csv(&profile))?;

    let mut r = study.header("reliability report");
    write_model(&mut r, &chain, &map, Some(mode));
    write_profile_table(&mut r, &chain, &profile)?;
    let warnings: Vec<Warning> = chain.warnings().iter().chain(&profile.warnings).cloned().collect();
    write_warnings(&mut r, &warnings);
    fs::write(study.report_path("reliability_report.txt"), r)?;
    info!("wrote {}", csv_path.display());
    Ok(())
}

pub fn run_stationary(config: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let study = Study::load(config, overrides)?;
    let block = study
        .config
        .stationary
        .clone()
        .ok_or_else(|| CliError::Config("stationary: block required for this command".into()))?;

    let mut r = study.header("stationary report");
    let mut warnings = Vec::new();
    let p: TransitionMatrix = match (block.matrix, block.rho) {
        (Some(rows), _) => TransitionMatrix::from_rows(&rows)?,
        (None, Some(rho)) => {
            let stages = study.config.stage_moments()?;
            let space = study.space_for(&stages)?;
            let step = build_homogeneous_tpm(&stages[0].marginal()?, rho.0, &space)?;
            warnings.extend(space.warnings().iter().cloned());
            warnings.extend(step.flags.into_iter().map(|f| f.into_warning(1)));
            step.matrix
        }
        (None, None) => unreachable!("checked at load"),
    };
    let pi = stationary(&p)?;
    let residual = stationary_residual(&p, &pi)?;

    let mut csv = String::from("state,pi\n");
    for (i, v) in pi.iter().enumerate() {
        let _ = writeln!(csv, "{},{}", i + 1, sig12(*v));
    }
    fs::write(
        study.output(&study.config.outputs.stationary_csv, "stationary.csv"),
        csv,
    )?;

    let _ = writeln!(r, "\n--- results ---");
    let _ = writeln!(r, "states (N): {}", p.n_states());
    let _ = writeln!(r, "residual max|pi P - pi|: {:.3e}", residual);
    write_warnings(&mut r, &warnings);
    fs::write(study.report_path("stationary_report.txt"), r)?;
    Ok(())
}

fn validation_csv(report: &ValidationReport) -> String {
    let mut csv = String::from("check,index,mode,analytic,empirical,statistic,limit,passed\n");
    for s in &report.steps {
        let _ = writeln!(
            csv,
            "tpm,{},,,,{},{},{}",
            s.step,
            sig12(s.agreement()),
            sig12(MIN_CELL_AGREEMENT),
            s.agreement() >= MIN_CELL_AGREEMENT
        );
    }
    for s in &report.stages {
        let _ = writeln!(
            csv,
            "stage,{},,,,{},{},{}",
            s.stage,
            sig12(s.chi2),
            sig12(s.limit),
            s.passed()
        );
    }
    for p in &report.pf {
        let _ = writeln!(
            csv,
            "pf,{},{},{},{},{},{},{}",
            p.stage,
            p.mode,
            sig12(p.analytic),
            sig12(p.empirical),
            sig12((p.empirical - p.analytic).abs()),
            sig12(p.band),
            p.passed()
        );
    }
    csv
}

pub fn run_validate(config: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let study = Study::load(config, overrides)?;
    let block = study
        .config
        .validate
        .clone()
        .ok_or_else(|| CliError::Config("validate: block required for this command".into()))?;
    let seed = overrides.seed.unwrap_or(block.seed);
    let stages = study.config.stage_moments()?;
    let analytic_stages: Vec<StageMoments> = match &block.analytic_rho_override {
        Some(rhos) => stages
            .iter()
            .enumerate()
            .map(|(k, s)| StageMoments::new(s.mu, s.sigma, rhos.get(k).copied()))
            .collect::<Result<_, _>>()?,
        None => stages.clone(),
    };
    let (chain, map) = study.chain_for(&analytic_stages)?;
    let paths = simulate(&SimulationSpec {
        stages,
        n_paths: block.n_paths,
        seed,
    })?;
    let report = compare(&chain, &map, &paths)?;

    fs::write(
        study.output(&study.config.outputs.validation_csv, "validation.csv"),
        validation_csv(&report),
    )?;

    let mut r = study.header("validation report");
    write_model(&mut r, &chain, &map, None);
    let _ = writeln!(r, "paths: {}", report.n_paths);
    let _ = writeln!(r, "seed: {seed}");
    if block.analytic_rho_override.is_some() {
        let _ = writeln!(r, "analytic rho override: active");
    }
    let _ = writeln!(
        r,
        "\n--- transition matrices (cells with row count >= 1000, 3-sigma bands) ---"
    );
    for s in &report.steps {
        let worst = s.worst.as_ref().map_or_else(
            || "none".to_string(),
            |c| {
                format!(
                    "{} sigma at ({}, {}): analytic {} vs empirical {} (row count {})",
                    sig12(c.z),
                    c.row + 1,
                    c.col + 1,
                    sig12(c.analytic),
                    sig12(c.empirical),
                    c.row_count
                )
            },
        );
        let _ = writeln!(
            r,
            "step {}: {}/{} cells within band ({}), unvisited rows {}, max deviation {}",
            s.step,
            s.cells_agreeing,
            s.cells_checked,
            sig12(s.agreement()),
            s.empty_rows,
            worst
        );
    }
    let _ = writeln!(r, "max TPM cell deviation: {} sigma", sig12(report.max_cell_z()));
    let _ = writeln!(
        r,
        "\n--- stage distributions (pooled chi-square, limit df + 3 sqrt(2 df)) ---"
    );
    for s in &report.stages {
        let _ = writeln!(
            r,
            "stage {}: chi2 {} on {} df (limit {}), max |freq - p| {} -> {}",
            s.stage,
            sig12(s.chi2),
            s.df,
            sig12(s.limit),
            sig12(s.max_abs_dev),
            if s.passed() { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(r, "\n--- failure probabilities (3-sigma binomial bands) ---");
    for p in &report.pf {
        let _ = writeln!(
            r,
            "stage {} {}: analytic {} empirical {} |diff| {} band {} ({} sigma) -> {}",
            p.stage,
            p.mode,
            sig12(p.analytic),
            sig12(p.empirical),
            sig12((p.empirical - p.analytic).abs()),
            sig12(p.band),
            sig12(p.z(report.n_paths)),
            if p.passed() { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(r, "\noverall: {}", if report.passed() { "PASS" } else { "FAIL" });
    write_warnings(&mut r, chain.warnings());
    fs::write(study.report_path("validation_report.txt"), r)?;

    if report.passed() {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

/// Reads a tabulated distribution: one probability per line, optionally
/// preceded by an index column and a header line.
pub fn read_distribution(path: &Path) -> Result<DiscreteDist, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut probs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) => probs.push(v),
            Err(_) if probs.is_empty() && lineno == 0 => continue,
            Err(_) => {
                return Err(CliError::Config(format!(
                    "{}:{}: `{field}` is not a number",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|p| p.is_nan() || *p < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(CliError::Config(format!(
            "{}: not a probability vector (entries must be >= 0 and sum to 1 within 1e-9; sum is {total})",
            path.display()
        )));
    }
    Ok(DiscreteDist::normalized(probs)?)
}

pub fn run_distance(p: &Path, q: &Path) -> Result<String, CliError> {
    let p = read_distribution(p)?;
    let q = read_distribution(q)?;
    Ok(sig12(distance(&p, &q)?))
}
