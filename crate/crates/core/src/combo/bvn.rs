//! Upper-orthant probabilities of the standard bivariate normal.
//!
//! `P(X > a, Y > b) = int_a^inf phi(x) * Q((b - rho x) / sqrt(1 - rho^2)) dx`
//! where `Q` is the normal survival function. The one-dimensional integral is
//! evaluated with adaptive 15-point Gauss-Kronrod on an initial partition
//! split at the point where the conditional tail switches from 0 to 1.

use crate::normal;
use crate::{Error, Result};

/// Mass of the standard normal beyond this bound is below 1e-23.
const LIMIT: f64 = 10.0;
const INITIAL_PANELS: usize = 8;
const ABS_TOL: f64 = 1e-14;
const MAX_DEPTH: u32 = 40;

/// `P(X > a, Y > b)` for a standard bivariate normal with correlation `rho`.
///
/// Infinite thresholds are allowed. Absolute error is below 1e-10.
pub fn bvn_upper(a: f64, b: f64, rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::InvalidCorrelation(rho));
    }
    if a.is_nan() || b.is_nan() {
        return Err(Error::InvalidCombo("bivariate normal threshold is NaN".into()));
    }
    if a == f64::INFINITY || b == f64::INFINITY {
        return Ok(0.0);
    }
    if a == f64::NEG_INFINITY {
        return Ok(normal::sf(b));
    }
    if b == f64::NEG_INFINITY {
        return Ok(normal::sf(a));
    }
    if rho == 1.0 {
        return Ok(normal::sf(a.max(b)));
    }
    if rho == -1.0 {
        // Y = -X, so the event is a < X < -b.
        return Ok((normal::cdf(-b) - normal::cdf(a)).max(0.0));
    }
    // Integrate over the variable with the larger threshold: shorter domain.
    let (a, b) = if a >= b { (a, b) } else { (b, a) };
    let lo = a.max(-LIMIT);
    let hi = LIMIT;
    if lo >= hi {
        return Ok(0.0);
    }
    let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let integrand = |x: f64| normal::pdf(x) * normal::sf((b - rho * x) / s);

    let mut breaks: Vec<f64> = (0..=INITIAL_PANELS)
        .map(|i| lo + (hi - lo) * i as f64 / INITIAL_PANELS as f64)
        .collect();
    if rho != 0.0 {
        let pivot = b / rho;
        if pivot > lo && pivot < hi {
            breaks.push(pivot);
            breaks.sort_by(f64::total_cmp);
        }
    }
    let width = hi - lo;
    let total: f64 = breaks
        .windows(2)
        .map(|w| adaptive(&integrand, w[0], w[1], ABS_TOL * (w[1] - w[0]) / width, 0))
        .sum();
    Ok(total.clamp(0.0, 1.0))
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64, depth: u32) -> f64 {
    let (kronrod, gauss) = gauss_kronrod_15(f, lo, hi);
    if (kronrod - gauss).abs() <= tol || depth >= MAX_DEPTH {
        return kronrod;
    }
    let mid = 0.5 * (lo + hi);
    adaptive(f, lo, mid, 0.5 * tol, depth + 1) + adaptive(f, mid, hi, 0.5 * tol, depth + 1)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, gauss * half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_forms() {
        assert!((bvn_upper(0.0, 0.0, 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((bvn_upper(0.0, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(bvn_upper(f64::NEG_INFINITY, f64::NEG_INFINITY, 0.3).unwrap(), 1.0);
        assert_eq!(bvn_upper(1.0, f64::INFINITY, 0.3).unwrap(), 0.0);
        for rho in [-0.99_f64, -0.5, 0.0, 0.3, 0.94, 0.99] {
            // Sheppard: P(X > 0, Y > 0) = 1/4 + asin(rho) / (2 pi).
            let expected = 0.25 + rho.asin() / (2.0 * PI);
            assert!((bvn_upper(0.0, 0.0, rho).unwrap() - expected).abs() < 1e-12, "rho = {rho}");
        }
        for a in [-3.0, -0.4, 0.0, 1.7, 4.0] {
            for b in [-2.0, 0.5, 2.5] {
                let indep = normal::sf(a) * normal::sf(b);
                assert!((bvn_upper(a, b, 0.0).unwrap() - indep).abs() < 1e-12);
                let upper = normal::sf(a.max(b));
                assert!((bvn_upper(a, b, 1.0).unwrap() - upper).abs() < 1e-15);
            }
            assert!((bvn_upper(a, f64::NEG_INFINITY, 0.7).unwrap() - normal::sf(a)).abs() < 1e-15);
        }
        assert!((bvn_upper(-1.0, -1.0, -1.0).unwrap() - (normal::cdf(1.0) - normal::cdf(-1.0))).abs() < 1e-15);
        assert_eq!(bvn_upper(1.0, 1.0, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_rho() {
        assert!(bvn_upper(0.0, 0.0, 1.0001).is_err());
        assert!(bvn_upper(0.0, 0.0, f64::NAN).is_err());
        assert!(bvn_upper(f64::NAN, 0.0, 0.5).is_err());
    }

    #[test]
    fn symmetric_in_thresholds() {
        for &(a, b, r) in &[(1.0, -0.5, 0.6), (2.2, 0.1, -0.8), (-1.5, 3.0, 0.97)] {
            let ab = bvn_upper(a, b, r).unwrap();
            let ba = bvn_upper(b, a, r).unwrap();
            assert!((ab - ba).abs() < 1e-15);
        }
    }

    #[test]
    fn inclusion_exclusion_with_lower_orthant() {
        // P(X > a, Y > b) = 1 - Phi(a) - Phi(b) + P(X <= a, Y <= b) and
        // P(X <= a, Y <= b) = P(-X > -a, -Y > -b) with the same rho.
        for &(a, b, r) in &[(0.3, 0.8, 0.5), (-1.2, 0.4, -0.3), (2.0, 2.1, 0.99)] {
            let upper = bvn_upper(a, b, r).unwrap();
            let lower = bvn_upper(-a, -b, r).unwrap();
            let recon = 1.0 - normal::cdf(a) - normal::cdf(b) + lower;
            assert!((upper - recon).abs() < 1e-13);
        }
    }
}
