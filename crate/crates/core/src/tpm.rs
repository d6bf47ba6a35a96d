//! One-step transition probability matrices from stage moments, and the chain
//! algebra built on them.
//!
//! Probability vectors are rows and evolve as `v ← vP`. Element `(i, j)` of the
//! step matrix from stage `k` to `k+1` is the bivariate normal mass of
//! `bin_i × bin_j` divided by the stage-`k` mass of `bin_i`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::distributions::{bvn_rect_prob, gaussian_interval_prob, Gaussian1D, Gaussian2D};
use crate::error::{Error, Result};
use crate::stage::{validate_stages, StageMoments};
use crate::state_space::StateSpace;
use crate::warning::Warning;

/// Tolerance on row sums of a stochastic matrix.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Pre-normalization row-sum deviation above which a quadrature warning is raised.
pub const QUADRATURE_WARN_TOL: f64 = 1e-6;
/// Conditioning mass below which a row is replaced by a point mass.
pub const MIN_ROW_MASS: f64 = 1e-14;

/// Row-stochastic `N × N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(DMatrix<f64>);

impl TransitionMatrix {
    /// Validates entries in `[0, 1]` and unit row sums.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::NotStochastic("matrix has no rows".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.len(),
            });
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        for (i, row) in m.row_iter().enumerate() {
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::NotStochastic(format!("row {i} has entry {v} outside [0, 1]")));
            }
            let s = row.sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn n_states(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        self.0.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `self × other`.
    pub fn then(&self, other: &TransitionMatrix) -> Result<Self> {
        if self.n_states() != other.n_states() {
            return Err(Error::DimensionMismatch {
                expected: self.n_states(),
                found: other.n_states(),
            });
        }
        Ok(Self(&self.0 * &other.0))
    }

    /// `P^n` by repeated squaring (`P^0 = I`).
    pub fn power(&self, mut n: u32) -> Self {
        let mut result = DMatrix::identity(self.n_states(), self.n_states());
        let mut base = self.0.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            n >>= 1;
        }
        Self(result)
    }

    /// Row vector times matrix: `vP`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_states() {
            return Err(Error::DimensionMismatch {
                expected: self.n_states(),
                found: v.len(),
            });
        }
        let row = DVector::from_column_slice(v).transpose() * &self.0;
        Ok(row.iter().copied().collect())
    }

    /// Copy with the given states made absorbing (their rows become unit vectors).
    pub fn with_absorbing(&self, states: impl IntoIterator<Item = usize>) -> Self {
        let mut m = self.0.clone();
        for s in states {
            m.row_mut(s).fill(0.0);
            m[(s, s)] = 1.0;
        }
        Self(m)
    }
}

/// Per-row diagnostics from building a step matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum RowFlag {
    Normalized { row: usize, deviation: f64 },
    PointMass { row: usize, mass: f64 },
}

impl RowFlag {
    pub fn into_warning(self, step: usize) -> Warning {
        match self {
            RowFlag::Normalized { row, deviation } => Warning::RowNormalization { step, row, deviation },
            RowFlag::PointMass { row, mass } => Warning::PointMassRow { step, row, mass },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTpm {
    pub matrix: TransitionMatrix,
    pub flags: Vec<RowFlag>,
    /// Largest pre-normalization row-sum deviation over rows with enough mass.
    pub max_deviation: f64,
}

/// Bin probabilities of `g`.
pub fn marginal_probs(g: &Gaussian1D, space: &StateSpace) -> Vec<f64> {
    space.bins().map(|b| gaussian_interval_prob(g, &b)).collect()
}

/// Step matrix from stage `mk` to stage `mk1`, using `mk.rho_next`.
pub fn build_step_tpm(mk: &StageMoments, mk1: &StageMoments, space: &StateSpace) -> Result<StepTpm> {
    tpm_from_joint(&mk.joint_with(mk1)?, space)
}

/// Step matrix of a homogeneous chain whose stage law is `g` with lag-one correlation `rho`.
pub fn build_homogeneous_tpm(g: &Gaussian1D, rho: f64, space: &StateSpace) -> Result<StepTpm> {
    tpm_from_joint(&Gaussian2D::new(*g, *g, rho)?, space)
}

/// Conditional transition matrix of the joint law `joint` over `space`.
/// Rows are evaluated concurrently; assembly order is fixed.
pub fn tpm_from_joint(joint: &Gaussian2D, space: &StateSpace) -> Result<StepTpm> {
    let n = space.n_states();
    let bins: Vec<_> = space.bins().collect();
    let from = joint.first();

    let rows: Vec<(Vec<f64>, Option<RowFlag>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mass = gaussian_interval_prob(&from, &bins[i]);
            if mass < MIN_ROW_MASS {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                return (row, Some(RowFlag::PointMass { row: i, mass }), 0.0);
            }
            let mut row: Vec<f64> = bins
                .iter()
                .map(|bj| bvn_rect_prob(joint, &bins[i], bj) / mass)
                .collect();
            let sum: f64 = row.iter().sum();
            let deviation = (sum - 1.0).abs();
            row.iter_mut().for_each(|p| *p /= sum);
            let flag = (deviation > QUADRATURE_WARN_TOL).then_some(RowFlag::Normalized { row: i, deviation });
            (row, flag, deviation)
        })
        .collect();

    if rows.iter().any(|(r, _, _)| r.iter().any(|p| !p.is_finite())) {
        return Err(Error::Quadrature("non-finite transition probability".into()));
    }
    let max_deviation = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let flags = rows.iter().filter_map(|r| r.1.clone()).collect();
    let matrix = DMatrix::from_fn(n, n, |i, j| rows[i].0[j]);
    Ok(StepTpm {
        matrix: TransitionMatrix(matrix),
        flags,
        max_deviation,
    })
}

/// Discretized nonhomogeneous chain: one step matrix per consecutive pair of stages.
#[derive(Debug, Clone)]
pub struct ChainModel {
    space: StateSpace,
    stages: Vec<StageMoments>,
    step_matrices: Vec<TransitionMatrix>,
    initial_probs: Vec<f64>,
    warnings: Vec<Warning>,
}

impl ChainModel {
    /// Builds all step matrices (concurrently) and the stage-1 bin probabilities.
    pub fn build(stages: &[StageMoments], space: StateSpace) -> Result<Self> {
        validate_stages(stages)?;
        let steps: Vec<StepTpm> = stages
            .par_windows(2)
            .map(|w| build_step_tpm(&w[0], &w[1], &space))
            .collect::<Result<_>>()?;
        let initial_probs = marginal_probs(&stages[0].marginal()?, &space);
        let mut warnings = space.warnings().to_vec();
        let mut step_matrices = Vec::with_capacity(steps.len());
        for (k, step) in steps.into_iter().enumerate() {
            warnings.extend(step.flags.into_iter().map(|f| f.into_warning(k + 1)));
            step_matrices.push(step.matrix);
        }
        Ok(Self {
            space,
            stages: stages.to_vec(),
            step_matrices,
            initial_probs,
            warnings,
        })
    }

    /// Assembles a chain from precomputed parts.
    pub fn from_parts(
        space: StateSpace,
        stages: Vec<StageMoments>,
        step_matrices: Vec<TransitionMatrix>,
        initial_probs: Vec<f64>,
    ) -> Result<Self> {
        let n = space.n_states();
        if step_matrices.len() + 1 != stages.len() {
            return Err(Error::DimensionMismatch {
                expected: stages.len().saturating_sub(1),
                found: step_matrices.len(),
            });
        }
        if let Some(m) = step_matrices.iter().find(|m| m.n_states() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.n_states(),
            });
        }
        check_probability_vector(&initial_probs, n, 1e-12)?;
        Ok(Self {
            space,
            stages,
            step_matrices,
            initial_probs,
            warnings: Vec::new(),
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn stages(&self) -> &[StageMoments] {
        &self.stages
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn step_matrices(&self) -> &[TransitionMatrix] {
        &self.step_matrices
    }

    /// Step matrix from stage `k` to `k + 1` (1-based).
    pub fn step(&self, k: usize) -> Result<&TransitionMatrix> {
        self.step_matrices.get(k.wrapping_sub(1)).ok_or(Error::IndexOutOfRange {
            what: "step",
            index: k,
            lo: 1,
            hi: self.step_matrices.len(),
        })
    }

    pub fn initial_probs(&self) -> &[f64] {
        &self.initial_probs
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }
}

pub(crate) fn check_probability_vector(p: &[f64], n: usize, tol: f64) -> Result<()> {
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.len(),
        });
    }
    if let Some(v) = p.iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(Error::NotAProbabilityVector(format!("entry {v} is negative or NaN")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(Error::NotAProbabilityVector(format!("sums to {s}")));
    }
    Ok(())
}

/// Ordered product `P_from × … × P_{to-1}` taking stage `from` to stage `to` (1-based).
pub fn chain_product(chain: &ChainModel, from: usize, to: usize) -> Result<TransitionMatrix> {
    let n = chain.n_stages();
    if from < 1 || from >= to || to > n {
        return Err(Error::IndexOutOfRange {
            what: "stage",
            index: if from < 1 || from >= n { from } else { to },
            lo: 1,
            hi: n,
        });
    }
    let mats = &chain.step_matrices[from - 1..to - 1];
    let mut acc = mats[0].clone();
    for m in &mats[1..] {
        acc = acc.then(m)?;
    }
    Ok(acc)
}

/// Singular values below this (relative to the largest) count as zero.
const RANK_TOL: f64 = 1e-10;

/// Stationary row vector `π` with `πP = π`, `Σπ = 1`, from a least-squares
/// solve of the stacked system `[Pᵀ − I; 1ᵀ] π = [0; 1]`.
pub fn stationary(p: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = p.n_states();
    let a = p.as_matrix().transpose() - DMatrix::<f64>::identity(n, n);
    let sv = a.clone().singular_values();
    let scale = sv.max().max(1.0);
    let null_dim = sv.iter().filter(|&&s| s < RANK_TOL * scale).count();
    if null_dim > 1 {
        return Err(Error::NonErgodic { null_dim });
    }
    let mut stacked = DMatrix::zeros(n + 1, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&a);
    stacked.row_mut(n).fill(1.0);
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let pi = stacked
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Quadrature(format!("stationary solve failed: {e}")))?;
    let mut pi: Vec<f64> = pi.iter().map(|&v| v.max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    Ok(pi)
}

/// `‖πP − π‖_∞`.
pub fn stationary_residual(p: &TransitionMatrix, pi: &[f64]) -> Result<f64> {
    let next = p.apply(pi)?;
    Ok(next.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_space::build_auto;

    fn two_state(a: f64, b: f64) -> TransitionMatrix {
        TransitionMatrix::from_rows(&[vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap()
    }

    #[test]
    fn marginal_probs_examples() {
        let z = Gaussian1D::standard();
        let halves = StateSpace::from_boundaries(vec![0.0], z).unwrap();
        assert_eq!(marginal_probs(&z, &halves), vec![0.5, 0.5]);
        let thirds = StateSpace::from_boundaries(vec![-1.0, 1.0], z).unwrap();
        let p = marginal_probs(&z, &thirds);
        let want = [
            0.158_655_253_931_457_05,
            0.682_689_492_137_085_9,
            0.158_655_253_931_457_05,
        ];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let single = StateSpace::from_boundaries(vec![], z).unwrap();
        assert_eq!(marginal_probs(&Gaussian1D::new(3.0, 2.0).unwrap(), &single), vec![1.0]);
    }

    #[test]
    fn independent_stages_give_identical_rows() {
        let a = StageMoments::new(1.0, 2.0, Some(0.0)).unwrap();
        let b = StageMoments::last(3.0, 1.5).unwrap();
        let space = build_auto(&[a, b], 20, 5.0).unwrap();
        let step = build_step_tpm(&a, &b, &space).unwrap();
        let marginal = marginal_probs(&b.marginal().unwrap(), &space);
        for i in 0..space.n_states() {
            for (j, m) in marginal.iter().enumerate() {
                assert!((step.matrix.get(i, j) - m).abs() < 1e-10);
            }
        }
        assert!(step.matrix.max_row_sum_error() < ROW_SUM_TOL);
    }

    #[test]
    fn reflection_symmetry_for_identical_centered_stages() {
        let a = StageMoments::new(0.0, 1.0, Some(0.7)).unwrap();
        let b = StageMoments::last(0.0, 1.0).unwrap();
        let space = build_auto(&[a, b], 30, 5.0).unwrap();
        let m = build_step_tpm(&a, &b, &space).unwrap().matrix;
        let n = m.n_states();
        for i in 0..n {
            for j in 0..n {
                assert!((m.get(i, j) - m.get(n - 1 - i, n - 1 - j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn strong_correlation_concentrates_on_diagonal() {
        let a = StageMoments::new(0.0, 1.0, Some(0.99)).unwrap();
        let b = StageMoments::last(0.0, 1.0).unwrap();
        let space = build_auto(&[a, b], 10, 3.0).unwrap();
        let m = build_step_tpm(&a, &b, &space).unwrap().matrix;
        for i in 3..=8 {
            let row = m.row(i);
            let argmax = (0..row.len()).max_by(|&x, &y| row[x].total_cmp(&row[y])).unwrap();
            assert_eq!(argmax, i);
        }
    }

    #[test]
    fn massless_rows_become_point_masses() {
        let a = StageMoments::new(0.0, 0.1, Some(0.5)).unwrap();
        let b = StageMoments::last(10.0, 5.0).unwrap();
        let space = build_auto(&[a, b], 50, 5.0).unwrap();
        let step = build_step_tpm(&a, &b, &space).unwrap();
        let last = space.n_states() - 1;
        assert_eq!(step.matrix.get(last, last), 1.0);
        assert!(step
            .flags
            .iter()
            .any(|f| matches!(f, RowFlag::PointMass { row, .. } if *row == last)));
    }

    #[test]
    fn degenerate_correlation_is_rejected() {
        let a = StageMoments::new(0.0, 1.0, Some(1.0)).unwrap();
        let b = StageMoments::last(0.0, 1.0).unwrap();
        let space = build_auto(&[a, b], 10, 5.0).unwrap();
        assert!(matches!(
            build_step_tpm(&a, &b, &space),
            Err(Error::DegenerateCorrelation { .. })
        ));
    }

    #[test]
    fn stationary_closed_forms() {
        let pi = stationary(&two_state(0.5, 0.5)).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12 && (pi[1] - 0.5).abs() < 1e-12);
        let pi = stationary(&two_state(0.2, 0.3)).unwrap();
        assert!((pi[0] - 0.6).abs() < 1e-12 && (pi[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn stationary_rejects_reducible_chain() {
        let p = TransitionMatrix::from_rows(&[
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.3, 0.7, 0.0, 0.0],
            vec![0.0, 0.0, 0.9, 0.1],
            vec![0.0, 0.0, 0.4, 0.6],
        ])
        .unwrap();
        assert!(matches!(stationary(&p), Err(Error::NonErgodic { null_dim: 2 })));
    }

    #[test]
    fn stationary_accepts_transient_states() {
        // State 2 is transient; the closed class {0, 1} has a unique law.
        let p = TransitionMatrix::from_rows(&[vec![0.8, 0.2, 0.0], vec![0.3, 0.7, 0.0], vec![0.2, 0.3, 0.5]]).unwrap();
        let pi = stationary(&p).unwrap();
        assert!((pi[0] - 0.6).abs() < 1e-12 && pi[2].abs() < 1e-12);
    }

    #[test]
    fn from_rows_validates() {
        assert!(TransitionMatrix::from_rows(&[vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::from_rows(&[vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::from_rows(&[vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn power_matches_repeated_product() {
        let p = two_state(0.2, 0.3);
        let sq = p.then(&p).unwrap();
        let diff = (p.power(2).as_matrix() - sq.as_matrix()).abs().max();
        assert!(diff < 1e-14);
        assert_eq!(p.power(0), TransitionMatrix::identity(2));
    }
}
