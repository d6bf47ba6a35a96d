//! Univariate and bivariate normal numerics.

mod bivariate;
mod normal;

pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};

pub(crate) use bivariate::std_rect;
pub(crate) use normal::{ncdf, npdf, nprob, nquantile, nsf};

use crate::error::{Error, Result};

/// Correlations with `|ρ|` at or above this bound are rejected as degenerate.
pub const RHO_LIMIT: f64 = 1.0 - 1e-9;

/// A univariate normal law `N(mu, sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D {
    mu: f64,
    sigma: f64,
}

impl Gaussian1D {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mu", format!("must be finite, got {mu}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be > 0 and finite, got {sigma}")));
        }
        Ok(Self { mu, sigma })
    }

    pub fn standard() -> Self {
        Self { mu: 0.0, sigma: 1.0 }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mu) / self.sigma
    }

    pub fn pdf(&self, x: f64) -> f64 {
        npdf(self.standardize(x)) / self.sigma
    }

    pub fn cdf(&self, x: f64) -> f64 {
        ncdf(self.standardize(x))
    }
}

/// A bivariate normal law with correlation `rho`, `|rho| < 1 - 1e-9`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2D {
    first: Gaussian1D,
    second: Gaussian1D,
    rho: f64,
}

impl Gaussian2D {
    pub fn new(first: Gaussian1D, second: Gaussian1D, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self { first, second, rho })
    }

    pub fn from_params(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64, rho: f64) -> Result<Self> {
        Self::new(Gaussian1D::new(mu1, sigma1)?, Gaussian1D::new(mu2, sigma2)?, rho)
    }

    pub fn first(&self) -> Gaussian1D {
        self.first
    }

    pub fn second(&self) -> Gaussian1D {
        self.second
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// The same law with its axes exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            first: self.second,
            second: self.first,
            rho: self.rho,
        }
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if rho.is_nan() {
        return Err(Error::NanInput("correlation"));
    }
    if rho.abs() >= RHO_LIMIT {
        return Err(Error::DegenerateCorrelation { rho });
    }
    Ok(())
}

/// Half-open interval `[lo, hi)` on the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::DegenerateInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub const fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Probability that `g` falls in `iv`.
pub fn gaussian_interval_prob(g: &Gaussian1D, iv: &Interval) -> f64 {
    nprob(g.standardize(iv.lo), g.standardize(iv.hi))
}

/// Probability of the rectangle `iv1 × iv2` under the bivariate law `g`.
pub fn bvn_rect_prob(g: &Gaussian2D, iv1: &Interval, iv2: &Interval) -> f64 {
    let (x, y) = (g.first, g.second);
    std_rect(
        x.standardize(iv1.lo),
        x.standardize(iv1.hi),
        y.standardize(iv2.lo),
        y.standardize(iv2.hi),
        g.rho,
    )
}

/// Bhattacharyya coefficient `∫ √(f_a f_b) dx` of two normal densities.
pub fn gaussian_overlap(a: &Gaussian1D, b: &Gaussian1D) -> f64 {
    let var_sum = a.sigma * a.sigma + b.sigma * b.sigma;
    let dmu = a.mu - b.mu;
    (2.0 * a.sigma * b.sigma / var_sum).sqrt() * (-dmu * dmu / (4.0 * var_sum)).exp()
}

/// Fidelity `T = (∫ √(f_a f_b) dx)²` between two normal densities, in `[0, 1]`.
pub fn gaussian_fidelity(a: &Gaussian1D, b: &Gaussian1D) -> f64 {
    let bc = gaussian_overlap(a, b);
    (bc * bc).min(1.0)
}
