//! Max-combo inference for two weighted log-rank statistics.
//!
//! Under the null the pair `(Z1, Z2)` is treated as standard bivariate normal
//! with correlation estimated from the same risk table. Per-component
//! thresholds are `c * q_i` with `q_i = Phi^-1(1 - k_i alpha)`, and `c` is
//! solved so that `P(Z1 > t1 or Z2 > t2) = alpha`. With an equal split the
//! thresholds coincide and equal the critical value of `max(Z1, Z2)`.

mod bvn;

pub use bvn::bvn_upper;

use serde::{Deserialize, Serialize};

use crate::dataset::RiskTableRow;
use crate::normal;
use crate::roots::{bisect, bracket_and_bisect};
use crate::weights::WeightSpec;
use crate::wlrt::{weighted_logrank, WlrtResult};
use crate::{Error, Result};

/// Tolerance on `k1 + k2 = 1`.
const SPLIT_TOL: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-12;
const P_VALUE_TOL: f64 = 1e-10;
const P_VALUE_MIN: f64 = 1e-12;
const P_VALUE_MAX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComboSpec {
    pub w1: WeightSpec,
    pub w2: WeightSpec,
    pub k1: f64,
    pub k2: f64,
    /// One-sided level.
    pub alpha: f64,
}

impl ComboSpec {
    pub fn new(w1: WeightSpec, w2: WeightSpec, k1: f64, alpha: f64) -> Result<Self> {
        let spec = Self { w1, w2, k1, k2: 1.0 - k1, alpha };
        spec.validate()?;
        Ok(spec)
    }

    /// A single weighted log-rank test at level `alpha`.
    pub fn single(w: WeightSpec, alpha: f64) -> Result<Self> {
        Self::new(w, w, 1.0, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        self.w1.validate()?;
        self.w2.validate()?;
        if !(0.0..=1.0).contains(&self.k1) || !(0.0..=1.0).contains(&self.k2) {
            return Err(Error::InvalidCombo(format!(
                "alpha split (k1, k2) = ({}, {}) must lie in [0, 1]",
                self.k1, self.k2
            )));
        }
        if (self.k1 + self.k2 - 1.0).abs() > SPLIT_TOL {
            return Err(Error::InvalidCombo(format!(
                "k1 + k2 must equal 1, got {} + {}",
                self.k1, self.k2
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::InvalidCombo(format!("alpha must lie in (0, 0.5), got {}", self.alpha)));
        }
        Ok(())
    }

    fn is_equal_split(&self) -> bool {
        self.k1 == self.k2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    /// Common critical value for an equal split, otherwise the scaling `c'`
    /// applied to the Bonferroni quantiles.
    pub c: f64,
    pub threshold1: f64,
    pub threshold2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComboResult {
    pub z1: f64,
    pub z2: f64,
    pub correlation: f64,
    pub c: f64,
    pub threshold1: f64,
    pub threshold2: f64,
    pub reject: bool,
    pub p_value: f64,
}

/// Null correlation of the two standardized statistics.
pub fn null_correlation(w1: &WeightSpec, w2: &WeightSpec, table: &[RiskTableRow]) -> Result<f64> {
    let r1 = weighted_logrank(w1, table)?;
    let r2 = weighted_logrank(w2, table)?;
    Ok(correlation_between(&r1, &r2))
}

/// Null correlation from two statistics computed on the same risk table.
pub fn correlation_between(r1: &WlrtResult, r2: &WlrtResult) -> f64 {
    if r1.per_time_weights == r2.per_time_weights {
        return 1.0;
    }
    let mut cross = crate::wlrt::NeumaierSum::default();
    for ((w1, w2), v) in r1.per_time_weights.iter().zip(&r2.per_time_weights).zip(&r1.per_time_var) {
        cross.add(w1 * w2 * v);
    }
    (cross.total() / (r1.variance.sqrt() * r2.variance.sqrt())).clamp(-1.0, 1.0)
}

fn checked_correlation(correlation: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&correlation) {
        return Err(Error::InvalidCorrelation(correlation));
    }
    if correlation < 0.0 {
        log::warn!("negative null correlation {correlation} clamped to 0");
        return Ok(0.0);
    }
    Ok(correlation)
}

/// `P(Z1 > t1 or Z2 > t2)` under the null.
fn union_upper(t1: f64, t2: f64, rho: f64) -> Result<f64> {
    Ok(normal::sf(t1) + normal::sf(t2) - bvn_upper(t1, t2, rho)?)
}

/// Per-component critical values at level `spec.alpha`.
pub fn critical_values(spec: &ComboSpec, correlation: f64) -> Result<CriticalValues> {
    spec.validate()?;
    let rho = checked_correlation(correlation)?;
    let alpha = spec.alpha;
    let z_alpha = normal::upper_quantile(alpha);
    if spec.k2 == 0.0 {
        return Ok(CriticalValues { c: 1.0, threshold1: z_alpha, threshold2: f64::INFINITY });
    }
    if spec.k1 == 0.0 {
        return Ok(CriticalValues { c: 1.0, threshold1: f64::INFINITY, threshold2: z_alpha });
    }
    let q1 = normal::upper_quantile(spec.k1 * alpha);
    let q2 = normal::upper_quantile(spec.k2 * alpha);

    if spec.is_equal_split() {
        // Root lies in [z_alpha, q1]: full correlation vs. Bonferroni.
        let objective = |c: f64| union_upper(c, c, rho).map_or(f64::NAN, |p| p - alpha);
        let c = solve(objective, z_alpha, q1)?;
        return Ok(CriticalValues { c, threshold1: c, threshold2: c });
    }
    let objective = |scale: f64| union_upper(scale * q1, scale * q2, rho).map_or(f64::NAN, |p| p - alpha);
    let scale = solve(objective, z_alpha / q1.min(q2), 1.0)?;
    Ok(CriticalValues { c: scale, threshold1: scale * q1, threshold2: scale * q2 })
}

/// Bisection on a slightly widened analytic bracket, falling back to
/// geometric expansion from `[0, 10]`.
fn solve<F: FnMut(f64) -> f64>(mut objective: F, lo: f64, hi: f64) -> Result<f64> {
    let pad = 1e-3;
    if let Some(root) = bisect(&mut objective, lo - pad, hi + pad, ROOT_TOL) {
        return Ok(root);
    }
    bracket_and_bisect(objective, 0.0, 10.0, ROOT_TOL).ok_or(Error::CriticalValueSearchFailed)
}

fn rejects_with(cv: &CriticalValues, z1: f64, z2: f64) -> bool {
    z1 > cv.threshold1 || z2 > cv.threshold2
}

/// Rejection decision at level `spec.alpha`.
///
/// Equivalent to comparing against [`critical_values`], but decides without
/// the root search when the statistics fall outside the interval between the
/// single-test quantile (a lower bound on every threshold) and the Bonferroni
/// quantiles (upper bounds).
pub fn rejects(spec: &ComboSpec, z1: f64, z2: f64, correlation: f64) -> Result<bool> {
    spec.validate()?;
    let z_alpha = normal::upper_quantile(spec.alpha);
    if spec.k2 == 0.0 {
        return Ok(z1 > z_alpha);
    }
    if spec.k1 == 0.0 {
        return Ok(z2 > z_alpha);
    }
    if z1.max(z2) <= z_alpha {
        return Ok(false);
    }
    let q1 = normal::upper_quantile(spec.k1 * spec.alpha);
    let q2 = normal::upper_quantile(spec.k2 * spec.alpha);
    if z1 > q1 || z2 > q2 {
        return Ok(true);
    }
    Ok(rejects_with(&critical_values(spec, correlation)?, z1, z2))
}

/// Smallest level at which the combo test rejects given `(z1, z2)`.
///
/// Single-component splits give `1 - Phi(z)` and the equal split evaluates
/// the union probability at `max(z1, z2)` directly. Unequal splits bisect
/// over the level, clamped to `[1e-12, 0.5]`.
pub fn combo_pvalue(spec: &ComboSpec, z1: f64, z2: f64, correlation: f64) -> Result<f64> {
    spec.validate()?;
    let rho = checked_correlation(correlation)?;
    if spec.k2 == 0.0 {
        return Ok(normal::sf(z1));
    }
    if spec.k1 == 0.0 {
        return Ok(normal::sf(z2));
    }
    if spec.is_equal_split() {
        let z = z1.max(z2);
        return union_upper(z, z, rho);
    }
    let rejects_at = |alpha: f64| -> Result<bool> {
        let at_level = ComboSpec { alpha, ..*spec };
        Ok(rejects_with(&critical_values(&at_level, rho)?, z1, z2))
    };
    let (mut lo, mut hi) = (P_VALUE_MIN, P_VALUE_MAX);
    if rejects_at(lo)? {
        return Ok(lo);
    }
    // alpha = 0.5 itself is outside the admissible range.
    let top = hi - 1e-12;
    if !rejects_at(top)? {
        return Ok(hi);
    }
    hi = top;
    while hi - lo > P_VALUE_TOL {
        let mid = 0.5 * (lo + hi);
        if rejects_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Full combo inference on `(z1, z2)` with a given null correlation.
pub fn combo_test(spec: &ComboSpec, z1: f64, z2: f64, correlation: f64) -> Result<ComboResult> {
    let rho = checked_correlation(correlation)?;
    let cv = critical_values(spec, rho)?;
    let p_value = combo_pvalue(spec, z1, z2, rho)?;
    Ok(ComboResult {
        z1,
        z2,
        correlation: rho,
        c: cv.c,
        threshold1: cv.threshold1,
        threshold2: cv.threshold2,
        reject: rejects_with(&cv, z1, z2),
        p_value,
    })
}

/// Runs the combo test on a risk table, estimating the correlation from it.
pub fn analyze(spec: &ComboSpec, table: &[RiskTableRow]) -> Result<ComboResult> {
    spec.validate()?;
    let r1 = weighted_logrank(&spec.w1, table)?;
    let r2 = weighted_logrank(&spec.w2, table)?;
    combo_test(spec, r1.z, r2.z, correlation_between(&r1, &r2))
}
