//! Two-arm trial simulation with piecewise-exponential event times, uniform
//! recruitment and administrative censoring at a fixed study end.
//!
//! Random numbers come from ChaCha8 keyed by the master seed, with the
//! replicate index selecting the stream and each subject consuming exactly two
//! 64-bit words (entry, then event). A dataset is therefore a pure function of
//! `(seed, replicate)` and the subject index fixes its position in the stream,
//! independent of how replicates are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{Arm, SurvivalRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseHazard {
    /// Interior change points in months; empty for a single exponential.
    pub knots: Vec<f64>,
    /// One rate per segment, `knots.len() + 1` in total.
    pub rates: Vec<f64>,
}

impl PiecewiseHazard {
    pub fn new(knots: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let h = Self { knots, rates };
        h.validate()?;
        Ok(h)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![rate])
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates.len() != self.knots.len() + 1 {
            return Err(Error::InvalidScenario(format!(
                "{} knots need {} rates, got {}",
                self.knots.len(),
                self.knots.len() + 1,
                self.rates.len()
            )));
        }
        if self.knots.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(Error::InvalidScenario("knots must be finite and >= 0".into()));
        }
        if self.knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidScenario("knots must be strictly increasing".into()));
        }
        if self.rates.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::InvalidScenario("hazard rates must be finite and > 0".into()));
        }
        Ok(())
    }

    fn segment_end(&self, j: usize) -> f64 {
        self.knots.get(j).copied().unwrap_or(f64::INFINITY)
    }

    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        let mut start = 0.0;
        let mut total = 0.0;
        for (j, &rate) in self.rates.iter().enumerate() {
            let end = self.segment_end(j);
            if t <= end {
                return total + rate * (t - start);
            }
            total += rate * (end - start);
            start = end;
        }
        total
    }

    pub fn survival(&self, t: f64) -> f64 {
        (-self.cumulative_hazard(t)).exp()
    }
}

/// Inverts the cumulative hazard at `-ln(u)`.
pub fn sample_event_time(h: &PiecewiseHazard, u: f64) -> f64 {
    let target = -u.ln();
    let mut start = 0.0;
    let mut accumulated = 0.0;
    for (j, &rate) in h.rates.iter().enumerate() {
        let end = h.segment_end(j);
        let segment = rate * (end - start);
        if accumulated + segment >= target {
            return start + (target - accumulated) / rate;
        }
        accumulated += segment;
        start = end;
    }
    unreachable!("last segment is unbounded")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Total sample size, split 1:1.
    pub n_total: usize,
    pub study_length: f64,
    pub recruit_duration: f64,
    /// Control arm.
    pub arm0: PiecewiseHazard,
    /// Experimental arm.
    pub arm1: PiecewiseHazard,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n_total < 2 || !self.n_total.is_multiple_of(2) {
            return Err(Error::InvalidScenario(format!(
                "n_total must be even and >= 2, got {}",
                self.n_total
            )));
        }
        if !(self.recruit_duration > 0.0 && self.recruit_duration <= self.study_length && self.study_length.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "need 0 < recruit_duration <= study_length, got {} and {}",
                self.recruit_duration, self.study_length
            )));
        }
        self.arm0.validate()?;
        self.arm1.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn content_hash(&self) -> String {
        let compact = serde_json::to_string(self).expect("scenario serializes");
        Sha256::digest(compact.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn hazard(&self, arm: Arm) -> &PiecewiseHazard {
        match arm {
            Arm::Control => &self.arm0,
            Arm::Experimental => &self.arm1,
        }
    }
}

fn builtin(name: &str, n_total: usize, study_length: f64, exp: (&[f64], &[f64]), ctl: (&[f64], &[f64])) -> Scenario {
    Scenario {
        name: name.to_string(),
        n_total,
        study_length,
        recruit_duration: 12.0,
        arm0: PiecewiseHazard { knots: ctl.0.to_vec(), rates: ctl.1.to_vec() },
        arm1: PiecewiseHazard { knots: exp.0.to_vec(), rates: exp.1.to_vec() },
    }
}

/// The ten reference scenarios: {high, low} event rate crossed with delayed
/// effect, proportional hazards, diminishing effect, equal survival and early
/// harm.
pub fn builtin_scenarios() -> Vec<Scenario> {
    const HIGH: (usize, f64) = (1000, 24.0);
    const LOW: (usize, f64) = (6000, 36.0);
    let none: &[f64] = &[];
    vec![
        builtin("high_delayed", HIGH.0, HIGH.1, (&[6.0], &[0.0462, 0.0289]), (none, &[0.0462])),
        builtin("high_ph", HIGH.0, HIGH.1, (none, &[0.0365]), (none, &[0.0462])),
        builtin("high_diminishing", HIGH.0, HIGH.1, (&[9.0, 18.0], &[0.0315, 0.0408, 0.0693]), (none, &[0.0462])),
        builtin("high_equal", HIGH.0, HIGH.1, (none, &[0.0462]), (none, &[0.0462])),
        builtin("high_early_harm", HIGH.0, HIGH.1, (&[2.0], &[0.0990, 0.0462]), (&[2.0, 6.0], &[0.0495, 0.0693, 0.0462])),
        builtin("low_delayed", LOW.0, LOW.1, (&[6.0], &[0.00462, 0.00352]), (none, &[0.00462])),
        builtin("low_ph", LOW.0, LOW.1, (none, &[0.00375]), (none, &[0.00462])),
        builtin("low_diminishing", LOW.0, LOW.1, (&[9.0, 18.0], &[0.00210, 0.00289, 0.00578]), (none, &[0.00462])),
        builtin("low_equal", LOW.0, LOW.1, (none, &[0.00462]), (none, &[0.00462])),
        builtin("low_early_harm", LOW.0, LOW.1, (&[4.0], &[0.01160, 0.00462]), (&[4.0, 13.0], &[0.00385, 0.00770, 0.00462])),
    ]
}

pub fn builtin_names() -> Vec<String> {
    builtin_scenarios().into_iter().map(|s| s.name).collect()
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name).ok_or_else(|| Error::UnknownScenario {
        name: name.to_string(),
        valid: builtin_names().join(", "),
    })
}

/// Deterministic stream of open-interval uniforms for one replicate.
pub struct ReplicateStream {
    rng: ChaCha8Rng,
}

impl ReplicateStream {
    pub fn new(master_seed: u64, replicate: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(replicate);
        Self { rng }
    }

    /// Uniform on (0, 1) from the top 53 bits, never exactly 0 or 1.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// Simulates one trial; equivalent to replicate 0 of `seed`.
pub fn simulate_trial(s: &Scenario, seed: u64) -> Result<Vec<SurvivalRecord>> {
    simulate_replicate(s, seed, 0)
}

/// Subjects `0..N/2` are control, the rest experimental.
pub fn simulate_replicate(s: &Scenario, master_seed: u64, replicate: u64) -> Result<Vec<SurvivalRecord>> {
    s.validate()?;
    let mut stream = ReplicateStream::new(master_seed, replicate);
    let per_arm = s.n_total / 2;
    let records = (0..s.n_total)
        .map(|i| {
            let arm = if i < per_arm { Arm::Control } else { Arm::Experimental };
            let entry = stream.uniform() * s.recruit_duration;
            let event_time = sample_event_time(s.hazard(arm), stream.uniform());
            let follow_up = s.study_length - entry;
            SurvivalRecord {
                time: event_time.min(follow_up),
                event: event_time <= follow_up,
                arm,
            }
        })
        .collect();
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_inverse() {
        let h = PiecewiseHazard::exponential(0.0462).unwrap();
        let t = sample_event_time(&h, (-0.0462f64 * 10.0).exp());
        assert!((t - 10.0).abs() < 1e-12);
    }

    #[test]
    fn two_piece_inverse() {
        let h = PiecewiseHazard::new(vec![6.0], vec![0.0462, 0.0289]).unwrap();
        let u = (-(0.0462 * 6.0 + 0.0289 * 4.0_f64)).exp();
        assert!((sample_event_time(&h, u) - 10.0).abs() < 1e-12);
        assert!((h.cumulative_hazard(10.0) - (0.0462 * 6.0 + 0.0289 * 4.0)).abs() < 1e-15);
        let tiny = sample_event_time(&h, 1.0 - 1e-15);
        assert!(tiny > 0.0 && tiny < 1e-12);
    }

    #[test]
    fn inverse_matches_cumulative_hazard() {
        let h = PiecewiseHazard::new(vec![2.0, 6.0], vec![0.0495, 0.0693, 0.0462]).unwrap();
        for i in 1..100 {
            let u = i as f64 / 100.0;
            let t = sample_event_time(&h, u);
            assert!((h.survival(t) - u).abs() < 1e-13);
        }
    }

    #[test]
    fn hazard_validation() {
        assert!(PiecewiseHazard::new(vec![6.0], vec![0.1]).is_err());
        assert!(PiecewiseHazard::new(vec![6.0, 3.0], vec![0.1, 0.2, 0.3]).is_err());
        assert!(PiecewiseHazard::new(vec![], vec![0.0]).is_err());
        let mut s = builtin_scenario("high_ph").unwrap();
        s.n_total = 999;
        assert!(s.validate().is_err());
        s.n_total = 1000;
        s.recruit_duration = 30.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn builtins_round_trip_through_json() {
        let all = builtin_scenarios();
        assert_eq!(all.len(), 10);
        for s in &all {
            s.validate().unwrap();
            let back = Scenario::from_json(&s.to_json()).unwrap();
            assert_eq!(&back, s);
            assert_eq!(back.content_hash(), s.content_hash());
        }
        let err = builtin_scenario("medium_ph").unwrap_err().to_string();
        assert!(err.contains("high_delayed") && err.contains("low_early_harm"), "{err}");
        let ph = &all[1].to_json();
        assert!(ph.contains("\"knots\": []"), "{ph}");
    }

    #[test]
    fn deterministic_and_bounded() {
        let s = builtin_scenario("high_delayed").unwrap();
        let a = simulate_trial(&s, 42).unwrap();
        let b = simulate_trial(&s, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, simulate_trial(&s, 43).unwrap());
        assert_ne!(a, simulate_replicate(&s, 42, 1).unwrap());
        assert_eq!(a.iter().filter(|r| r.arm == Arm::Control).count(), 500);
        assert!(a.iter().all(|r| r.time >= 0.0 && r.time <= s.study_length));
        // Censored subjects sit exactly at their follow-up cap, which is at
        // least study_length - recruit_duration.
        assert!(a.iter().filter(|r| !r.event).all(|r| r.time >= s.study_length - s.recruit_duration));
    }

    #[test]
    fn vanishing_hazard_censors_everyone() {
        let mut s = builtin_scenario("high_equal").unwrap();
        s.study_length = 12.0;
        s.arm0 = PiecewiseHazard::exponential(1e-12).unwrap();
        s.arm1 = PiecewiseHazard::exponential(1e-12).unwrap();
        let records = simulate_trial(&s, 1).unwrap();
        assert!(records.iter().all(|r| !r.event));
    }

    #[test]
    fn event_fraction_matches_closed_form() {
        let s = builtin_scenario("high_equal").unwrap();
        let (lambda, l, r) = (0.0462, s.study_length, s.recruit_duration);
        // 1 - (1/R) int_0^R exp(-lambda (L - e)) de
        let expected = 1.0 - ((-lambda * (l - r)).exp() - (-lambda * l).exp()) / (lambda * r);
        let fractions: Vec<f64> = (0..200)
            .map(|rep| {
                let d = simulate_replicate(&s, 2024, rep).unwrap();
                d.iter().filter(|x| x.event).count() as f64 / d.len() as f64
            })
            .collect();
        let n = fractions.len() as f64;
        let mean = fractions.iter().sum::<f64>() / n;
        let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} expected {expected} se {se}");
    }

    #[test]
    fn empirical_survival_at_knots() {
        const N: u64 = 100_000;
        for s in builtin_scenarios() {
            for h in [&s.arm0, &s.arm1] {
                let mut stream = ReplicateStream::new(99, 0);
                let times: Vec<f64> = (0..N).map(|_| sample_event_time(h, stream.uniform())).collect();
                let checkpoints: Vec<f64> = if h.knots.is_empty() { vec![s.study_length] } else { h.knots.clone() };
                for t in checkpoints {
                    let p = h.survival(t);
                    let emp = times.iter().filter(|&&x| x > t).count() as f64 / N as f64;
                    let se = (p * (1.0 - p) / N as f64).sqrt();
                    assert!((emp - p).abs() < 3.0 * se, "{} t={t}: {emp} vs {p}", s.name);
                }
            }
        }
    }
}
