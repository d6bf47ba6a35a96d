//! Discretization of the response axis into mutually exclusive, collectively
//! exhaustive bins, and the safe/failure split at an allowable response.
//!
//! Bins are half-open: with finite boundaries `b_0 < … < b_{N-2}`, bin 0 is
//! `(-∞, b_0)`, bin `i` is `[b_{i-1}, b_i)` and bin `N-1` is `[b_{N-2}, ∞)`.

use std::ops::Range;

use crate::distributions::{ncdf, npdf, nsf, Gaussian1D, Interval};
use crate::error::{Error, Result};
use crate::stage::StageMoments;
use crate::warning::Warning;

/// Default number of equal-width interior bins.
pub const DEFAULT_N_INTERIOR: usize = 50;
/// Default half-width of the finite span, in stage standard deviations.
pub const DEFAULT_K_SIGMA: f64 = 5.0;

const TAIL_MASS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    boundaries: Vec<f64>,
    representatives: Vec<f64>,
    reference: Gaussian1D,
    warnings: Vec<Warning>,
}

impl StateSpace {
    /// Builds a space from explicit finite boundaries; tail representatives
    /// are conditional means under `reference`.
    pub fn from_boundaries(boundaries: Vec<f64>, reference: Gaussian1D) -> Result<Self> {
        if let Some(b) = boundaries.iter().find(|b| !b.is_finite()) {
            return Err(Error::invalid("boundaries", format!("must be finite, got {b}")));
        }
        if let Some(w) = boundaries.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "boundaries",
                format!("must be strictly increasing ({} followed by {})", w[0], w[1]),
            ));
        }
        let mut space = Self {
            boundaries,
            representatives: Vec::new(),
            reference,
            warnings: Vec::new(),
        };
        let (reps, warnings) = representatives_for(&space, &reference);
        space.representatives = reps;
        space.warnings = warnings;
        Ok(space)
    }

    pub fn n_states(&self) -> usize {
        self.boundaries.len() + 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn representatives(&self) -> &[f64] {
        &self.representatives
    }

    pub fn reference(&self) -> Gaussian1D {
        self.reference
    }

    /// Fallback flags raised while placing representatives.
    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn bin(&self, i: usize) -> Interval {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.boundaries[i - 1]
        };
        let hi = self.boundaries.get(i).copied().unwrap_or(f64::INFINITY);
        Interval::new(lo, hi).expect("boundaries are strictly increasing")
    }

    pub fn bins(&self) -> impl Iterator<Item = Interval> + '_ {
        (0..self.n_states()).map(|i| self.bin(i))
    }

    /// Index of the bin containing `x`.
    pub fn locate(&self, x: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= x)
    }

    /// The finite span `[b_0, b_{N-2}]`, if any boundary exists.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((*self.boundaries.first()?, *self.boundaries.last()?))
    }

    /// Mean width of the finite interior bins.
    pub fn mean_interior_width(&self) -> Option<f64> {
        let (lo, hi) = self.span()?;
        let n = self.boundaries.len() - 1;
        (n > 0).then(|| (hi - lo) / n as f64)
    }
}

/// Equal-width discretization covering every stage's `μ ± k_sigma·σ`, plus two
/// semi-infinite tail bins. Representatives use the first stage's marginal.
pub fn build_auto(stages: &[StageMoments], n_interior: usize, k_sigma: f64) -> Result<StateSpace> {
    let first = stages.first().ok_or(Error::EmptyStages)?;
    if n_interior == 0 {
        return Err(Error::invalid("n_interior", "must be at least 1"));
    }
    if !(k_sigma > 0.0 && k_sigma.is_finite()) {
        return Err(Error::invalid("k_sigma", format!("must be > 0, got {k_sigma}")));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in stages {
        let g = s.marginal()?;
        lo = lo.min(g.mu() - k_sigma * g.sigma());
        hi = hi.max(g.mu() + k_sigma * g.sigma());
    }
    let width = (hi - lo) / n_interior as f64;
    let boundaries = (0..=n_interior)
        .map(|i| if i == n_interior { hi } else { lo + i as f64 * width })
        .collect();
    StateSpace::from_boundaries(boundaries, first.marginal()?)
}

/// Representative value of each bin: midpoints for finite bins, conditional
/// means of `reference` for the tails.
pub fn representatives_for(space: &StateSpace, reference: &Gaussian1D) -> (Vec<f64>, Vec<Warning>) {
    let n = space.n_states();
    let (mu, sigma) = (reference.mu(), reference.sigma());
    let fallback_width = space.mean_interior_width().unwrap_or(sigma);
    let mut warnings = Vec::new();
    let reps = (0..n)
        .map(|i| {
            let bin = space.bin(i);
            match (bin.lo().is_finite(), bin.hi().is_finite()) {
                (true, true) => 0.5 * (bin.lo() + bin.hi()),
                (false, false) => mu,
                (false, true) => {
                    let beta = reference.standardize(bin.hi());
                    let mass = ncdf(beta);
                    if mass < TAIL_MASS_FLOOR {
                        let value = bin.hi() - 0.5 * fallback_width;
                        warnings.push(Warning::TailRepresentativeFallback { bin: i, value });
                        value
                    } else {
                        mu - sigma * npdf(beta) / mass
                    }
                }
                (true, false) => {
                    let alpha = reference.standardize(bin.lo());
                    let mass = nsf(alpha);
                    if mass < TAIL_MASS_FLOOR {
                        let value = bin.lo() + 0.5 * fallback_width;
                        warnings.push(Warning::TailRepresentativeFallback { bin: i, value });
                        value
                    } else {
                        mu + sigma * npdf(alpha) / mass
                    }
                }
            }
        })
        .collect();
    (reps, warnings)
}

/// Split of the states into the safe aggregate (bins wholly below the
/// allowable response) and the failure aggregate (the rest).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationMap {
    threshold: f64,
    n_safe: usize,
    n_states: usize,
}

impl AggregationMap {
    /// Every state safe; used when no allowable response is given.
    pub fn all_safe(n_states: usize) -> Self {
        Self {
            threshold: f64::INFINITY,
            n_safe: n_states,
            n_states,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Number of safe states (`k1`).
    pub fn n_safe(&self) -> usize {
        self.n_safe
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn safe_states(&self) -> Range<usize> {
        0..self.n_safe
    }

    pub fn failure_states(&self) -> Range<usize> {
        self.n_safe..self.n_states
    }

    pub fn is_safe(&self, state: usize) -> bool {
        state < self.n_safe
    }
}

/// Splits `space` at `allowable`, inserting it as a boundary when it does not
/// coincide with an existing one.
pub fn aggregate(space: &StateSpace, allowable: f64) -> Result<(StateSpace, AggregationMap)> {
    let (lo, hi) = space.span().ok_or_else(|| {
        Error::invalid(
            "boundaries",
            "no finite boundary to place an allowable response against",
        )
    })?;
    if !(lo..=hi).contains(&allowable) {
        return Err(Error::AllowableOutOfSpan { allowable, lo, hi });
    }
    let tol = 1e-12 * allowable.abs().max(1.0);
    let existing = space.boundaries.iter().position(|&b| (b - allowable).abs() <= tol);
    let (refined, idx) = match existing {
        Some(idx) => (space.clone(), idx),
        None => {
            let idx = space.boundaries.partition_point(|&b| b < allowable);
            let mut boundaries = space.boundaries.clone();
            boundaries.insert(idx, allowable);
            (StateSpace::from_boundaries(boundaries, space.reference)?, idx)
        }
    };
    let map = AggregationMap {
        threshold: refined.boundaries[idx],
        n_safe: idx + 1,
        n_states: refined.n_states(),
    };
    Ok((refined, map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_stage() -> StageMoments {
        StageMoments::last(0.0, 1.0).unwrap()
    }

    #[test]
    fn auto_single_stage() {
        let space = build_auto(&[std_stage()], 10, 5.0).unwrap();
        assert_eq!(space.n_states(), 12);
        let want: Vec<f64> = (-5..=5).map(f64::from).collect();
        for (b, w) in space.boundaries().iter().zip(&want) {
            assert!((b - w).abs() < 1e-12);
        }
    }

    #[test]
    fn auto_envelope_over_stages() {
        let stages = [
            StageMoments::new(0.0, 1.0, Some(0.5)).unwrap(),
            StageMoments::last(10.0, 2.0).unwrap(),
        ];
        let space = build_auto(&stages, 50, 5.0).unwrap();
        assert_eq!(space.span(), Some((-5.0, 20.0)));
        assert!(matches!(build_auto(&[], 10, 5.0), Err(Error::EmptyStages)));
    }

    #[test]
    fn auto_single_interior_bin() {
        let space = build_auto(&[std_stage()], 1, 2.0).unwrap();
        assert_eq!(space.n_states(), 3);
        assert_eq!(space.bin(0), Interval::new(f64::NEG_INFINITY, -2.0).unwrap());
        assert_eq!(space.bin(1), Interval::new(-2.0, 2.0).unwrap());
        assert_eq!(space.bin(2), Interval::new(2.0, f64::INFINITY).unwrap());
    }

    #[test]
    fn representatives_examples() {
        let z = Gaussian1D::standard();
        let space = StateSpace::from_boundaries(vec![0.0, 1.0, 3.0], z).unwrap();
        let reps = space.representatives();
        assert_eq!(reps[2], 2.0);
        // Truncated-normal mean of (-∞, 0): -φ(0)/Φ(0).
        assert!((reps[0] + 0.797_884_560_802_865_4).abs() < 1e-15);
        assert!(reps.windows(2).all(|w| w[0] < w[1]));

        let sym = build_auto(&[std_stage()], 10, 5.0).unwrap();
        let r = sym.representatives();
        for i in 0..r.len() {
            assert!((r[i] + r[r.len() - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn representatives_fall_back_on_massless_tail() {
        let z = Gaussian1D::standard();
        let space = StateSpace::from_boundaries(vec![-60.0, -59.0, -58.0], z).unwrap();
        assert_eq!(space.representatives()[0], -60.5);
        assert!(matches!(
            space.warnings()[0],
            Warning::TailRepresentativeFallback { bin: 0, .. }
        ));
    }

    #[test]
    fn locate_partitions_the_line() {
        let space = StateSpace::from_boundaries(vec![0.0, 1.0, 2.0], Gaussian1D::standard()).unwrap();
        for &(x, want) in &[
            (-1e300, 0),
            (-0.0, 1),
            (0.0, 1),
            (0.999, 1),
            (1.0, 2),
            (2.0, 3),
            (1e300, 3),
        ] {
            assert_eq!(space.locate(x), want, "x = {x}");
            assert!(space.bin(want).contains(x));
            assert_eq!(space.bins().filter(|b| b.contains(x)).count(), 1);
        }
    }

    #[test]
    fn aggregate_reuses_existing_boundary() {
        let space = build_auto(&[std_stage()], 10, 5.0).unwrap();
        let (refined, map) = aggregate(&space, 4.0).unwrap();
        assert_eq!(refined.n_states(), space.n_states());
        assert_eq!(map.n_safe(), 10);
        assert_eq!(map.threshold(), refined.boundaries()[9]);
        assert!(refined.bin(9).hi() <= 4.0 && refined.bin(10).lo() >= 4.0 - 1e-12);
    }

    #[test]
    fn aggregate_inserts_threshold() {
        let space = StateSpace::from_boundaries(vec![0.0, 1.0, 2.0], Gaussian1D::standard()).unwrap();
        let (refined, map) = aggregate(&space, 1.5).unwrap();
        assert_eq!(refined.boundaries(), &[0.0, 1.0, 1.5, 2.0]);
        assert_eq!(refined.bin(2), Interval::new(1.0, 1.5).unwrap());
        assert_eq!(refined.bin(3), Interval::new(1.5, 2.0).unwrap());
        assert_eq!(map.safe_states(), 0..3);
        assert_eq!(map.failure_states(), 3..5);
        assert_eq!(refined.representatives()[2], 1.25);
    }

    #[test]
    fn aggregate_at_lowest_boundary_leaves_one_safe_state() {
        let space = StateSpace::from_boundaries(vec![0.0, 1.0, 2.0], Gaussian1D::standard()).unwrap();
        let (_, map) = aggregate(&space, 0.0).unwrap();
        assert_eq!(map.safe_states(), 0..1);
        assert!(matches!(aggregate(&space, -0.1), Err(Error::AllowableOutOfSpan { .. })));
        assert!(matches!(aggregate(&space, 2.5), Err(Error::AllowableOutOfSpan { .. })));
    }
}
