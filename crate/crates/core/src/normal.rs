//! Standard normal distribution helpers.
//!
//! Tail probabilities use libm's `erfc` (sub-ulp). Quantiles start from
//! statrs' `erfc_inv` and are polished with Halley steps against that `erfc`,
//! so `sf(upper_quantile(q))` reproduces `q` to rounding.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Density of the standard normal.
#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Lower tail `P(Z <= x)`.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `P(Z > x)`, accurate far into the right tail.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Quantile function. `p = 0` maps to `-inf` and `p = 1` to `+inf`.
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        -upper_quantile(p)
    }
}

/// Upper quantile `x` with `P(Z > x) = q`, computed without forming `1 - q`.
pub fn upper_quantile(q: f64) -> f64 {
    if q <= 0.0 {
        f64::INFINITY
    } else if q >= 1.0 {
        f64::NEG_INFINITY
    } else {
        polish(SQRT_2 * erfc_inv(2.0 * q), q)
    }
}

fn polish(mut x: f64, q: f64) -> f64 {
    for _ in 0..2 {
        let density = pdf(x);
        if density == 0.0 || !x.is_finite() {
            break;
        }
        // Newton step on sf(x) - q with Halley's curvature correction.
        let t = (sf(x) - q) / density;
        x += t / (1.0 - 0.5 * x * t);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
        assert!((quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((upper_quantile(0.025) - 1.959_963_984_540_054).abs() < 1e-12);
        assert_eq!(upper_quantile(0.0), f64::INFINITY);
        assert!((sf(10.0) - 7.619_853_024_160_527e-24).abs() < 1e-36);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            assert!((cdf(quantile(p)) - p).abs() < 1e-14, "p = {p}");
            assert!((sf(upper_quantile(p)) - p).abs() < 1e-14, "p = {p}");
        }
    }
}
