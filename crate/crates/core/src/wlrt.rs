//! Weighted log-rank statistic for a single weight function.
//!
//! `g = sum_l W(t_l) * (d1_l - E[d1_l])` with the hypergeometric null moments
//! of the arm-1 event count at each event time. The standardized statistic is
//! oriented so that benefit on arm 1 (fewer events than expected) is positive:
//! `z = -g / sqrt(var(g))`, and the one-sided test rejects for large `z`.

use serde::{Deserialize, Serialize};

use crate::dataset::RiskTableRow;
use crate::weights::{evaluate_weights, WeightSpec};
use crate::{normal, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WlrtResult {
    /// Weighted sum of observed minus expected arm-1 events.
    pub g: f64,
    pub variance: f64,
    /// Standardized statistic, positive when arm 1 has fewer events than expected.
    pub z: f64,
    pub per_time_weights: Vec<f64>,
    pub per_time_var: Vec<f64>,
}

impl WlrtResult {
    /// One-sided p-value `1 - Phi(z)`.
    pub fn p_value(&self) -> f64 {
        normal::sf(self.z)
    }
}

/// Null mean and variance of the arm-1 event count at one event time.
#[inline]
pub fn hypergeometric_moments(row: &RiskTableRow) -> (f64, f64) {
    let n = row.n_total as f64;
    let n1 = row.n_arm1 as f64;
    let d = row.d_total as f64;
    let mean = n1 * d / n;
    let variance = if row.n_total <= 1 {
        0.0
    } else {
        n1 * (n - n1) * d * (n - d) / (n * n * (n - 1.0))
    };
    (mean, variance)
}

pub fn weighted_logrank(spec: &WeightSpec, table: &[RiskTableRow]) -> Result<WlrtResult> {
    spec.validate()?;
    let weights = evaluate_weights(spec, table);
    weighted_logrank_with_weights(table, weights)
}

/// Same as [`weighted_logrank`] with weights already evaluated per row.
pub fn weighted_logrank_with_weights(table: &[RiskTableRow], weights: Vec<f64>) -> Result<WlrtResult> {
    if table.is_empty() {
        return Err(Error::NoEvents);
    }
    assert_eq!(weights.len(), table.len(), "one weight per risk-table row");
    let mut g = NeumaierSum::default();
    let mut variance = NeumaierSum::default();
    let mut per_time_var = Vec::with_capacity(table.len());
    for (row, &w) in table.iter().zip(&weights) {
        let (mean, var) = hypergeometric_moments(row);
        g.add(w * (row.d_arm1 as f64 - mean));
        variance.add(w * w * var);
        per_time_var.push(var);
    }
    let (g, variance) = (g.total(), variance.total());
    if variance.is_nan() || variance <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(WlrtResult {
        g,
        variance,
        z: -g / variance.sqrt(),
        per_time_weights: weights,
        per_time_var,
    })
}

/// Compensated (Neumaier) summation; terms are added in row order.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}
