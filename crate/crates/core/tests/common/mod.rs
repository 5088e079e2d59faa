//! Independent reference implementations used only by tests. Nothing here
//! goes through the risk table, the weight module or the conditional-normal
//! kernel.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmw::dataset::{Arm, SurvivalRecord};

/// `P(X > a, Y > b)` by nested adaptive Simpson over the bivariate density.
pub fn bvn_upper_oracle(a: f64, b: f64, rho: f64) -> f64 {
    const UPPER: f64 = 9.0;
    const PANELS: usize = 96;
    let a = a.max(-UPPER);
    let b = b.max(-UPPER);
    if a >= UPPER || b >= UPPER {
        return 0.0;
    }
    let det = 1.0 - rho * rho;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let density = |x: f64, y: f64| norm * (-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det)).exp();
    let inner = |x: f64| panels(|y| density(x, y), b, UPPER, PANELS, 1e-15);
    panels(inner, a, UPPER, PANELS, 1e-13)
}

fn panels<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, tol: f64) -> f64 {
    let h = (hi - lo) / n as f64;
    (0..n)
        .map(|i| {
            let (x0, x1) = (lo + i as f64 * h, lo + (i + 1) as f64 * h);
            let (f0, f1, fm) = (f(x0), f(x1), f(0.5 * (x0 + x1)));
            simpson(&f, x0, x1, f0, fm, f1, simpson_rule(x0, x1, f0, fm, f1), tol / n as f64, 0)
        })
        .sum()
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth >= 30 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}

/// Per-event-time quantities computed by direct scans of the raw records.
pub struct TextbookTime {
    pub at_risk: f64,
    pub at_risk_arm1: f64,
    pub events: f64,
    pub events_arm1: f64,
    pub km_before: f64,
}

pub fn textbook_times(records: &[SurvivalRecord]) -> Vec<TextbookTime> {
    let mut times: Vec<f64> = records.iter().filter(|r| r.event).map(|r| r.time).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let mut km = 1.0;
    times
        .into_iter()
        .map(|t| {
            let risk: Vec<_> = records.iter().filter(|r| r.time >= t).collect();
            let dead: Vec<_> = risk.iter().filter(|r| r.event && r.time == t).collect();
            let out = TextbookTime {
                at_risk: risk.len() as f64,
                at_risk_arm1: risk.iter().filter(|r| r.arm == Arm::Experimental).count() as f64,
                events: dead.len() as f64,
                events_arm1: dead.iter().filter(|r| r.arm == Arm::Experimental).count() as f64,
                km_before: km,
            };
            km *= (out.at_risk - out.events) / out.at_risk;
            out
        })
        .collect()
}

fn hypergeometric_var(t: &TextbookTime) -> f64 {
    if t.at_risk < 2.0 {
        return 0.0;
    }
    let (n, n1, d) = (t.at_risk, t.at_risk_arm1, t.events);
    (n1 / n) * (1.0 - n1 / n) * d * (n - d) / (n - 1.0)
}

/// Classic two-sample log-rank Z, positive when arm 1 has fewer events than expected.
pub fn textbook_logrank_z(records: &[SurvivalRecord]) -> Option<f64> {
    let (mut o_minus_e, mut v) = (0.0, 0.0);
    for t in textbook_times(records) {
        o_minus_e += t.events_arm1 - t.events * t.at_risk_arm1 / t.at_risk;
        v += hypergeometric_var(&t);
    }
    (v > 0.0).then(|| -o_minus_e / v.sqrt())
}

pub enum OracleWeight {
    LogRank,
    Modest(f64),
    Fh(f64, f64),
}

fn oracle_weight(w: &OracleWeight, s: f64) -> f64 {
    match *w {
        OracleWeight::LogRank => 1.0,
        OracleWeight::Modest(s_star) => 1.0 / if s > s_star { s } else { s_star },
        OracleWeight::Fh(rho, gamma) => {
            let a = if rho == 0.0 { 1.0 } else { s.powf(rho) };
            let b = if gamma == 0.0 { 1.0 } else { (1.0 - s).powf(gamma) };
            a * b
        }
    }
}

/// Null correlation via three explicit sums over event times.
pub fn triple_sum_correlation(records: &[SurvivalRecord], w1: &OracleWeight, w2: &OracleWeight) -> f64 {
    let (mut s12, mut s11, mut s22) = (0.0, 0.0, 0.0);
    for t in textbook_times(records) {
        let v = hypergeometric_var(&t);
        let a = oracle_weight(w1, t.km_before);
        let b = oracle_weight(w2, t.km_before);
        s12 += a * b * v;
        s11 += a * a * v;
        s22 += b * b * v;
    }
    s12 / (s11 * s22).sqrt()
}

/// Small random two-arm dataset with at least one event on each arm, with
/// ties on a coarse time grid about half the time.
pub fn random_dataset(rng: &mut ChaCha8Rng, max_subjects: usize) -> Vec<SurvivalRecord> {
    let n = rng.random_range(4..=max_subjects);
    let tied = rng.random_bool(0.5);
    let mut records: Vec<SurvivalRecord> = (0..n)
        .map(|_| {
            let time = if tied { f64::from(rng.random_range(1..12)) } else { rng.random_range(0.0..30.0) };
            let arm = if rng.random_bool(0.5) { Arm::Experimental } else { Arm::Control };
            SurvivalRecord { time, event: rng.random_bool(0.7), arm }
        })
        .collect();
    records[0].arm = Arm::Control;
    records[0].event = true;
    records[1].arm = Arm::Experimental;
    records[1].event = true;
    records
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
