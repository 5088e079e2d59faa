//! Monte Carlo operating characteristics and assurance.
//!
//! Every method is evaluated on the same simulated dataset within a replicate
//! (common random numbers). Replicate `r` depends only on `(seed, r)`, so
//! results are identical for any thread count and a longer run extends a
//! shorter one without changing its decisions.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combo::{correlation_between, rejects, ComboSpec};
use crate::dataset::build_risk_table;
use crate::simulator::{simulate_replicate, Scenario};
use crate::weights::WeightSpec;
use crate::wlrt::{weighted_logrank, WlrtResult};
use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.025;
pub const DEFAULT_REPLICATES: usize = 10_000;
pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub label: String,
    pub combo: ComboSpec,
}

impl MethodSpec {
    pub fn new(label: impl Into<String>, combo: ComboSpec) -> Self {
        Self { label: label.into(), combo }
    }
}

/// The six comparison methods: LR, MW(0.5), rMW with k1 = 0.5 and 0.6,
/// FH(0, 0.5), and MaxCombo of LR with FH(0, 0.5).
pub fn paper_methods(alpha: f64) -> Result<Vec<MethodSpec>> {
    let lr = WeightSpec::Constant;
    let mw = WeightSpec::modest(0.5)?;
    let fh = WeightSpec::fleming_harrington(0.0, 0.5)?;
    Ok(vec![
        MethodSpec::new("LR", ComboSpec::single(lr, alpha)?),
        MethodSpec::new("MW", ComboSpec::single(mw, alpha)?),
        MethodSpec::new("rMW(k1=0.5)", ComboSpec::new(lr, mw, 0.5, alpha)?),
        MethodSpec::new("rMW(k1=0.6)", ComboSpec::new(lr, mw, 0.6, alpha)?),
        MethodSpec::new("FH", ComboSpec::single(fh, alpha)?),
        MethodSpec::new("MaxCombo", ComboSpec::new(lr, fh, 0.5, alpha)?),
    ])
}

/// Canonical text form of a combo test, e.g. `max(lr,mw(0.5);k1=0.6,alpha=0.025)`.
pub fn combo_label(spec: &ComboSpec) -> String {
    if spec.k2 == 0.0 && spec.w1 == spec.w2 && spec.alpha == DEFAULT_ALPHA {
        return spec.w1.to_string();
    }
    format!("max({},{};k1={},alpha={})", spec.w1, spec.w2, spec.k1, spec.alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodPower {
    pub label: String,
    pub spec: String,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub mc_standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingCharacteristics {
    pub scenario: String,
    pub scenario_hash: String,
    pub replicates: usize,
    pub seed: u64,
    /// Replicates with no usable statistic; counted as non-rejections.
    pub degenerate_replicates: usize,
    pub methods: Vec<MethodPower>,
}

impl OperatingCharacteristics {
    pub fn method(&self, label: &str) -> Result<&MethodPower> {
        self.methods
            .iter()
            .find(|m| m.label == label)
            .ok_or_else(|| Error::MissingMethod(label.to_string()))
    }

    pub fn rejection_rate(&self, label: &str) -> Result<f64> {
        Ok(self.method(label)?.rejection_rate)
    }
}

fn validate_methods(methods: &[MethodSpec]) -> Result<()> {
    if methods.is_empty() {
        return Err(Error::InvalidHarness("no methods given".into()));
    }
    let mut seen = HashSet::new();
    for m in methods {
        m.combo.validate()?;
        if !seen.insert(m.label.as_str()) {
            return Err(Error::InvalidHarness(format!("duplicate method label `{}`", m.label)));
        }
    }
    Ok(())
}

/// Decisions for one replicate, one per method, plus whether the replicate
/// was degenerate for any method.
pub fn replicate_decisions(s: &Scenario, methods: &[MethodSpec], seed: u64, replicate: u64) -> Result<(Vec<bool>, bool)> {
    let records = simulate_replicate(s, seed, replicate)?;
    let table = match build_risk_table(&records) {
        Ok(t) => t,
        Err(e) => {
            log::warn!("{} replicate {replicate}: {e}; counted as non-rejection", s.name);
            return Ok((vec![false; methods.len()], true));
        }
    };
    let mut cache: Vec<(WeightSpec, Option<WlrtResult>)> = Vec::new();
    let mut statistic = |w: &WeightSpec| -> usize {
        if let Some(i) = cache.iter().position(|(spec, _)| spec == w) {
            return i;
        }
        cache.push((*w, weighted_logrank(w, &table).ok()));
        cache.len() - 1
    };
    let mut indices = Vec::with_capacity(methods.len());
    for m in methods {
        indices.push((statistic(&m.combo.w1), statistic(&m.combo.w2)));
    }
    let mut degenerate = false;
    let mut decisions = Vec::with_capacity(methods.len());
    for (m, &(i1, i2)) in methods.iter().zip(&indices) {
        let spec = &m.combo;
        let needs1 = spec.k1 > 0.0;
        let needs2 = spec.k2 > 0.0;
        let r1 = cache[i1].1.as_ref();
        let r2 = cache[i2].1.as_ref();
        if (needs1 && r1.is_none()) || (needs2 && r2.is_none()) {
            log::warn!("{} replicate {replicate}: degenerate variance for `{}`", s.name, m.label);
            degenerate = true;
            decisions.push(false);
            continue;
        }
        let decision = match (r1, r2) {
            (Some(a), Some(b)) => rejects(spec, a.z, b.z, correlation_between(a, b)),
            (Some(a), None) => rejects(spec, a.z, f64::NEG_INFINITY, 0.0),
            (None, Some(b)) => rejects(spec, f64::NEG_INFINITY, b.z, 0.0),
            (None, None) => unreachable!(),
        };
        decisions.push(decision.unwrap_or_else(|e| {
            log::warn!("{} replicate {replicate}: `{}` failed: {e}", s.name, m.label);
            degenerate = true;
            false
        }));
    }
    Ok((decisions, degenerate))
}

/// Per-replicate decisions for replicates `0..replicates`, in replicate order.
/// Runs on the current rayon pool.
pub fn all_decisions(s: &Scenario, methods: &[MethodSpec], replicates: usize, seed: u64) -> Result<Vec<(Vec<bool>, bool)>> {
    s.validate()?;
    validate_methods(methods)?;
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| replicate_decisions(s, methods, seed, r))
        .collect()
}

pub fn estimate_power(s: &Scenario, methods: &[MethodSpec], replicates: usize, seed: u64) -> Result<OperatingCharacteristics> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidHarness(format!(
            "need at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    let decisions = all_decisions(s, methods, replicates, seed)?;
    Ok(summarize(s, methods, &decisions, seed))
}

/// Aggregates per-replicate decisions (possibly a prefix of a longer run).
pub fn summarize(s: &Scenario, methods: &[MethodSpec], decisions: &[(Vec<bool>, bool)], seed: u64) -> OperatingCharacteristics {
    let n = decisions.len();
    let methods = methods
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let rejections = decisions.iter().filter(|(d, _)| d[j]).count();
            let p = rejections as f64 / n as f64;
            MethodPower {
                label: m.label.clone(),
                spec: combo_label(&m.combo),
                rejections,
                rejection_rate: p,
                mc_standard_error: (p * (1.0 - p) / n as f64).sqrt(),
            }
        })
        .collect();
    OperatingCharacteristics {
        scenario: s.name.clone(),
        scenario_hash: s.content_hash(),
        replicates: n,
        seed,
        degenerate_replicates: decisions.iter().filter(|(_, deg)| *deg).count(),
        methods,
    }
}

/// Discrete prior over scenario names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssuranceSpec {
    pub prior: BTreeMap<String, f64>,
}

impl AssuranceSpec {
    pub fn new(prior: BTreeMap<String, f64>) -> Result<Self> {
        if prior.is_empty() {
            return Err(Error::InvalidPrior("prior is empty".into()));
        }
        if let Some((k, v)) = prior.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidPrior(format!("weight for `{k}` must be >= 0, got {v}")));
        }
        let total: f64 = prior.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPrior(format!("weights must sum to 1, got {total}")));
        }
        Ok(Self { prior })
    }

    /// Parses `name:weight,name:weight,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut prior = BTreeMap::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, weight) = item
                .split_once(':')
                .ok_or_else(|| Error::InvalidPrior(format!("expected `scenario:weight`, got `{item}`")))?;
            let weight: f64 = weight
                .trim()
                .parse()
                .map_err(|_| Error::InvalidPrior(format!("invalid weight in `{item}`")))?;
            if prior.insert(name.trim().to_string(), weight).is_some() {
                return Err(Error::InvalidPrior(format!("scenario `{}` listed twice", name.trim())));
            }
        }
        Self::new(prior)
    }
}

/// Prior-weighted average of one method's rejection rates.
pub fn assurance(
    oc_by_scenario: &BTreeMap<String, OperatingCharacteristics>,
    prior: &AssuranceSpec,
    method: &str,
) -> Result<f64> {
    let mut total = 0.0;
    for (scenario, weight) in &prior.prior {
        let oc = oc_by_scenario
            .get(scenario)
            .ok_or_else(|| Error::MissingScenario(scenario.clone()))?;
        total += weight * oc.rejection_rate(method)?;
    }
    Ok(total)
}

const CSV_COLUMNS: [&str; 9] = [
    "scenario",
    "method",
    "spec",
    "rejections",
    "replicates",
    "rejection_rate",
    "mc_standard_error",
    "seed",
    "scenario_hash",
];

/// One row per (scenario, method). Floats use the shortest exact representation.
pub fn write_power_csv<W: Write>(results: &[OperatingCharacteristics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for oc in results {
        for m in &oc.methods {
            w.write_record([
                oc.scenario.clone(),
                m.label.clone(),
                m.spec.clone(),
                m.rejections.to_string(),
                oc.replicates.to_string(),
                m.rejection_rate.to_string(),
                m.mc_standard_error.to_string(),
                oc.seed.to_string(),
                oc.scenario_hash.clone(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_power_csv<R: Read>(input: R) -> Result<BTreeMap<String, OperatingCharacteristics>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_COLUMNS {
        return Err(Error::Csv { line: 1, reason: format!("expected header `{}`", CSV_COLUMNS.join(",")) });
    }
    let mut out: BTreeMap<String, OperatingCharacteristics> = BTreeMap::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|_| Error::Csv { line, reason: format!("invalid {} `{}`", CSV_COLUMNS[i], &row[i]) })
        };
        let int = |i: usize| -> Result<u64> {
            row[i].parse().map_err(|_| Error::Csv { line, reason: format!("invalid {} `{}`", CSV_COLUMNS[i], &row[i]) })
        };
        let entry = out.entry(row[0].to_string()).or_insert_with(|| OperatingCharacteristics {
            scenario: row[0].to_string(),
            scenario_hash: row[8].to_string(),
            replicates: 0,
            seed: 0,
            degenerate_replicates: 0,
            methods: Vec::new(),
        });
        entry.replicates = int(4)? as usize;
        entry.seed = int(7)?;
        entry.methods.push(MethodPower {
            label: row[1].to_string(),
            spec: row[2].to_string(),
            rejections: int(3)? as usize,
            rejection_rate: num(5)?,
            mc_standard_error: num(6)?,
        });
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv { line: e.position().map_or(0, |p| p.line()), reason: e.to_string() }
}
