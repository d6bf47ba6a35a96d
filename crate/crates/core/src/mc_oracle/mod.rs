//! Monte Carlo oracle: samples the continuous Gaussian Markov process implied
//! by the stage moments (not the discretized chain) and estimates transition
//! matrices, bin frequencies and failure probabilities from the sample.
//!
//! Each path draws from its own ChaCha8 stream keyed by `(seed, path_index)`,
//! so the output does not depend on thread count or scheduling.

mod compare;

pub use compare::{
    compare, CellCheck, PfCheck, StageCheck, StepCheck, ValidationReport, BAND_SIGMAS, MIN_CELL_AGREEMENT,
    MIN_EXPECTED_COUNT, MIN_ROW_COUNT,
};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::distributions::{check_rho, nquantile};
use crate::error::{Error, Result};
use crate::reliability::Mode;
use crate::stage::{validate_stages, StageMoments};
use crate::state_space::StateSpace;
use crate::tpm::TransitionMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub stages: Vec<StageMoments>,
    pub n_paths: usize,
    pub seed: u64,
}

/// Simulated responses, one row per path and one column per stage.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    n_stages: usize,
    data: Vec<f64>,
}

impl PathMatrix {
    pub fn n_paths(&self) -> usize {
        self.data.len() / self.n_stages
    }

    pub fn n_stages(&self) -> usize {
        self.n_stages
    }

    /// Path `p` across all stages.
    pub fn path(&self, p: usize) -> &[f64] {
        &self.data[p * self.n_stages..(p + 1) * self.n_stages]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_stages)
    }

    /// Response at stage `k` (1-based) on every path.
    pub fn stage_values(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.paths().map(move |p| p[k - 1])
    }
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
#[inline]
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Samples `X_1 ~ N(μ_1, σ_1²)` and
/// `X_{k+1} | X_k = x ~ N(μ_{k+1} + ρ_k σ_{k+1}(x − μ_k)/σ_k, σ_{k+1}²(1 − ρ_k²))`.
pub fn simulate(spec: &SimulationSpec) -> Result<PathMatrix> {
    validate_stages(&spec.stages)?;
    if spec.n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be at least 1"));
    }
    for s in &spec.stages {
        if let Some(rho) = s.rho_next {
            check_rho(rho)?;
        }
    }
    let stages = &spec.stages;
    let n_stages = stages.len();
    let mut data = vec![0.0; spec.n_paths * n_stages];
    data.par_chunks_mut(n_stages).enumerate().for_each(|(p, row)| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(p as u64);
        let mut x = stages[0].mu + stages[0].sigma * nquantile(open_unit(&mut rng));
        row[0] = x;
        for k in 1..n_stages {
            let (prev, cur) = (&stages[k - 1], &stages[k]);
            let rho = prev.rho_next.unwrap_or(0.0);
            let mean = cur.mu + rho * cur.sigma * (x - prev.mu) / prev.sigma;
            let sd = cur.sigma * ((1.0 - rho) * (1.0 + rho)).sqrt();
            x = mean + sd * nquantile(open_unit(&mut rng));
            row[k] = x;
        }
    });
    Ok(PathMatrix { n_stages, data })
}

/// Frequency estimate of one step matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTpm {
    pub matrix: TransitionMatrix,
    pub counts: Vec<Vec<u64>>,
    pub row_counts: Vec<u64>,
    /// Rows never visited; set to a point mass on themselves.
    pub empty_rows: Vec<usize>,
}

/// Transition frequencies from stage `k` to `k + 1` (1-based).
pub fn empirical_tpm(paths: &PathMatrix, space: &StateSpace, k: usize) -> Result<EmpiricalTpm> {
    if k < 1 || k >= paths.n_stages() {
        return Err(Error::IndexOutOfRange {
            what: "step",
            index: k,
            lo: 1,
            hi: paths.n_stages().saturating_sub(1),
        });
    }
    let n = space.n_states();
    let mut counts = vec![vec![0u64; n]; n];
    for p in paths.paths() {
        counts[space.locate(p[k - 1])][space.locate(p[k])] += 1;
    }
    let row_counts: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
    let mut empty_rows = Vec::new();
    let rows: Vec<Vec<f64>> = counts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if row_counts[i] == 0 {
                empty_rows.push(i);
                let mut point = vec![0.0; n];
                point[i] = 1.0;
                point
            } else {
                r.iter().map(|&c| c as f64 / row_counts[i] as f64).collect()
            }
        })
        .collect();
    Ok(EmpiricalTpm {
        matrix: TransitionMatrix::from_rows(&rows)?,
        counts,
        row_counts,
        empty_rows,
    })
}

/// Bin counts at stage `k` (1-based).
pub fn stage_counts(paths: &PathMatrix, space: &StateSpace, k: usize) -> Result<Vec<u64>> {
    if k < 1 || k > paths.n_stages() {
        return Err(Error::IndexOutOfRange {
            what: "stage",
            index: k,
            lo: 1,
            hi: paths.n_stages(),
        });
    }
    let mut counts = vec![0u64; space.n_states()];
    for x in paths.stage_values(k) {
        counts[space.locate(x)] += 1;
    }
    Ok(counts)
}

/// Fraction of paths at or above `threshold` at each stage (instantaneous), or
/// that have reached it at any stage so far (absorbing / first passage).
pub fn empirical_pf(paths: &PathMatrix, threshold: f64, mode: Mode) -> Vec<f64> {
    let n_stages = paths.n_stages();
    let mut hits = vec![0u64; n_stages];
    for p in paths.paths() {
        let mut failed = false;
        for (k, &x) in p.iter().enumerate() {
            let now = x >= threshold;
            failed = match mode {
                Mode::Instantaneous => now,
                Mode::Absorbing => failed || now,
            };
            hits[k] += u64::from(failed);
        }
    }
    let n = paths.n_paths() as f64;
    hits.into_iter().map(|h| h as f64 / n).collect()
}
