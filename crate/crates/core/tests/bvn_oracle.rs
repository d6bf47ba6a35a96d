//! Rectangle probabilities against direct 1-D integration of the conditional law.

use mchain_core::distributions::{bvn_rect_prob, std_normal_cdf, std_normal_pdf, Gaussian2D, Interval};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn phi(x: f64) -> f64 {
    std_normal_cdf(x).unwrap()
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let n = 64;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson(&f, lo, hi, fa, fm, fb, whole, 1e-15, 40)
        })
        .sum()
}

/// P(a1 <= X < b1, a2 <= Y < b2) for standard margins.
fn oracle(a1: f64, b1: f64, a2: f64, b2: f64, r: f64) -> f64 {
    let s = (1.0 - r * r).sqrt();
    let lo = a1.max(-12.0);
    let hi = b1.min(12.0);
    if lo >= hi {
        return 0.0;
    }
    integrate(
        |x| std_normal_pdf(x) * (phi((b2 - r * x) / s) - phi((a2 - r * x) / s)),
        lo,
        hi,
    )
}

fn rect(a1: f64, b1: f64, a2: f64, b2: f64, r: f64) -> f64 {
    let g = Gaussian2D::from_params(0.0, 0.0, 1.0, 1.0, r).unwrap();
    bvn_rect_prob(&g, &Interval::new(a1, b1).unwrap(), &Interval::new(a2, b2).unwrap())
}

#[test]
fn rectangles_match_quadrature() {
    let mut rng = StdRng::seed_from_u64(17);
    for &r in &[-0.99, -0.9, -0.5, -0.1, 0.0, 0.3, 0.5, 0.9, 0.99] {
        for _ in 0..20 {
            let (x1, x2): (f64, f64) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let (y1, y2): (f64, f64) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            let (a1, b1) = (x1.min(x2), x1.max(x2));
            let (a2, b2) = (y1.min(y2), y1.max(y2));
            let got = rect(a1, b1, a2, b2, r);
            let want = oracle(a1, b1, a2, b2, r);
            assert!(
                (got - want).abs() < 1e-10,
                "r={r} [{a1},{b1})x[{a2},{b2}): {got} vs {want}"
            );
        }
    }
}

#[test]
fn semi_infinite_rectangles_match_quadrature() {
    let inf = f64::INFINITY;
    for &r in &[-0.95, -0.5, 0.0, 0.5, 0.95] {
        for &(a1, b1, a2, b2) in &[
            (-inf, 0.0, -inf, 0.0),
            (1.0, inf, -inf, -1.0),
            (-inf, -2.0, 2.0, inf),
            (0.5, 1.5, 3.0, inf),
            (-inf, inf, -1.0, 1.0),
        ] {
            let got = rect(a1, b1, a2, b2, r);
            let want = oracle(a1, b1, a2, b2, r);
            assert!((got - want).abs() < 1e-10, "r={r}: {got} vs {want}");
        }
    }
}

#[test]
fn general_moments_reduce_to_standard() {
    let g = Gaussian2D::from_params(3.0, -1.0, 2.0, 0.5, 0.6).unwrap();
    let got = bvn_rect_prob(
        &g,
        &Interval::new(1.0, 4.0).unwrap(),
        &Interval::new(-1.5, -0.25).unwrap(),
    );
    let want = oracle(-1.0, 0.5, -1.0, 1.5, 0.6);
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");
}
