//! Bivariate normal orthant and rectangle probabilities.
//!
//! The orthant probability `P(X > h, Y > k)` follows Genz's double-precision
//! refinement of the Drezner–Wesolowsky method: the integral over the
//! correlation parameter is evaluated with 6/12/20-point Gauss–Legendre rules
//! chosen by `|ρ|`, and for `|ρ| >= 0.925` the singular part near `|ρ| = 1` is
//! subtracted analytically before integrating.
#![allow(clippy::excessive_precision)]

use std::f64::consts::TAU;

use super::normal::{nprob, nsf};

// (weight, abscissa) pairs; abscissae are the negative half of the symmetric rule.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, -0.932_469_514_203_152_2),
    (0.360_761_573_048_138_4, -0.661_209_386_466_264_7),
    (0.467_913_934_572_690_4, -0.238_619_186_083_197_0),
];

const GL12: [(f64, f64); 6] = [
    (0.047_175_336_386_511_77, -0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, -0.904_117_256_370_475_0),
    (0.160_078_328_543_346_4, -0.769_902_674_194_305_0),
    (0.203_167_426_723_065_9, -0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, -0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, -0.125_233_408_511_469_2),
];

const GL20: [(f64, f64); 10] = [
    (0.017_614_007_139_152_12, -0.993_128_599_185_094_9),
    (0.040_601_429_800_386_94, -0.963_971_927_277_913_8),
    (0.062_672_048_334_109_06, -0.912_234_428_251_325_9),
    (0.083_276_741_576_704_75, -0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, -0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, -0.636_053_680_726_515_0),
    (0.131_688_638_449_176_6, -0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, -0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, -0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, -0.076_526_521_133_497_33),
];

// Standardized limits beyond this are indistinguishable from infinity in f64.
const Z_CUTOFF: f64 = 40.0;

fn rule(abs_r: f64) -> &'static [(f64, f64)] {
    if abs_r < 0.3 {
        &GL6
    } else if abs_r < 0.75 {
        &GL12
    } else {
        &GL20
    }
}

#[inline]
fn snap(z: f64) -> f64 {
    if z > Z_CUTOFF {
        f64::INFINITY
    } else if z < -Z_CUTOFF {
        f64::NEG_INFINITY
    } else {
        z
    }
}

/// `P(X > h, Y > k)` for a standard bivariate normal with correlation `r`,
/// `|r| < 1`. Infinite limits are allowed.
pub(crate) fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let (h, k) = (snap(h), snap(k));
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return nsf(k);
    }
    if k == f64::NEG_INFINITY {
        return nsf(h);
    }
    genz_bvnd(h, k, r).clamp(0.0, 1.0)
}

fn genz_bvnd(h: f64, mut k: f64, r: f64) -> f64 {
    let quad = rule(r.abs());
    let mut hk = h * k;

    if r.abs() < 0.925 {
        if r == 0.0 {
            return nsf(h) * nsf(k);
        }
        let hs = 0.5 * (h * h + k * k);
        let asr = r.asin();
        let mut sum = 0.0;
        for &(w, x) in quad {
            for t in [1.0 + x, 1.0 - x] {
                let sn = (0.5 * asr * t).sin();
                sum += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return sum * asr / (2.0 * TAU) + nsf(h) * nsf(k);
    }

    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    let mut bvn = 0.0;
    let a2 = (1.0 - r) * (1.0 + r);
    let a = a2.sqrt();
    let b2 = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    bvn +=
        a * (-0.5 * (b2 / a2 + hk)).exp() * (1.0 - c * (b2 - a2) * (1.0 - d * b2 / 5.0) / 3.0 + c * d * a2 * a2 / 5.0);
    if hk > -160.0 {
        let b = b2.sqrt();
        bvn -= (-0.5 * hk).exp() * TAU.sqrt() * nsf(b / a) * b * (1.0 - c * b2 * (1.0 - d * b2 / 5.0) / 3.0);
    }
    let half_a = 0.5 * a;
    for &(w, x) in quad {
        let xs = (half_a * (x + 1.0)).powi(2);
        let rs = (1.0 - xs).sqrt();
        bvn += half_a
            * w
            * ((-b2 / (2.0 * xs) - hk / (1.0 + rs)).exp() / rs
                - (-0.5 * (b2 / xs + hk)).exp() * (1.0 + c * xs * (1.0 + d * xs)));
        let xs = a2 * (1.0 - x).powi(2) / 4.0;
        let rs = (1.0 - xs).sqrt();
        bvn += half_a
            * w
            * (-0.5 * (b2 / xs + hk)).exp()
            * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
    }
    bvn = -bvn / TAU;

    if r > 0.0 {
        bvn + nsf(h.max(k))
    } else {
        -bvn + (nsf(h) - nsf(k)).max(0.0)
    }
}

/// `P(a1 <= X < b1, a2 <= Y < b2)` for a standard bivariate normal with
/// correlation `r`. Each axis is reflected, if needed, so that the rectangle
/// sits on the upper side and the four orthant terms are tail-sized.
pub(crate) fn std_rect(a1: f64, b1: f64, a2: f64, b2: f64, r: f64) -> f64 {
    let (a1, b1, a2, b2) = (snap(a1), snap(b1), snap(a2), snap(b2));
    if a1 >= b1 || a2 >= b2 {
        return 0.0;
    }
    if r == 0.0 {
        return nprob(a1, b1) * nprob(a2, b2);
    }
    let (mut a1, mut b1, mut a2, mut b2, mut r) = (a1, b1, a2, b2, r);
    if lower_heavy(a1, b1) {
        (a1, b1) = (-b1, -a1);
        r = -r;
    }
    if lower_heavy(a2, b2) {
        (a2, b2) = (-b2, -a2);
        r = -r;
    }
    let p = upper_orthant(a1, a2, r) - upper_orthant(b1, a2, r) - upper_orthant(a1, b2, r) + upper_orthant(b1, b2, r);
    p.clamp(0.0, 1.0)
}

// True when most of the interval lies below zero.
#[inline]
fn lower_heavy(lo: f64, hi: f64) -> bool {
    if lo == f64::NEG_INFINITY {
        hi != f64::INFINITY
    } else if hi == f64::INFINITY {
        false
    } else {
        lo + hi < 0.0
    }
}

/// `P(X < h, Y < k)`: the arcsine law gives `1/4 + asin(r)/(2π)` at the origin.
#[cfg(test)]
pub(crate) fn lower_orthant(h: f64, k: f64, r: f64) -> f64 {
    upper_orthant(-h, -k, r)
}
