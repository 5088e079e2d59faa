//! Two-arm survival records and their reduction to a risk table.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Arm {
    Control,
    Experimental,
}

impl Arm {
    pub fn index(self) -> u8 {
        match self {
            Arm::Control => 0,
            Arm::Experimental => 1,
        }
    }
}

impl From<Arm> for u8 {
    fn from(arm: Arm) -> u8 {
        arm.index()
    }
}

impl TryFrom<u8> for Arm {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, String> {
        match value {
            0 => Ok(Arm::Control),
            1 => Ok(Arm::Experimental),
            other => Err(format!("arm must be 0 or 1, got {other}")),
        }
    }
}

/// One subject: observed time (months), event indicator and arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub time: f64,
    pub event: bool,
    pub arm: Arm,
}

impl SurvivalRecord {
    pub fn new(time: f64, event: bool, arm: Arm) -> Result<Self> {
        if !time.is_finite() || time < 0.0 {
            return Err(Error::InvalidRecord {
                index: 0,
                reason: format!("time must be finite and >= 0, got {time}"),
            });
        }
        Ok(Self { time, event, arm })
    }
}

/// Per distinct event time: numbers at risk and events, and the pooled
/// Kaplan-Meier estimate just before that time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskTableRow {
    pub tau: f64,
    pub n_total: u64,
    pub n_arm1: u64,
    pub d_total: u64,
    pub d_arm1: u64,
    pub km_left: f64,
}

/// Builds the risk table over all distinct event times.
///
/// Subjects censored at an event time are still counted at risk for that
/// time. Times are grouped by exact equality. Censoring-only times do not
/// produce rows.
pub fn build_risk_table(records: &[SurvivalRecord]) -> Result<Vec<RiskTableRow>> {
    if records.is_empty() {
        return Err(Error::NoData);
    }
    for (index, r) in records.iter().enumerate() {
        if !r.time.is_finite() || r.time < 0.0 {
            return Err(Error::InvalidRecord {
                index,
                reason: format!("time must be finite and >= 0, got {}", r.time),
            });
        }
    }
    if !records.iter().any(|r| r.event) {
        return Err(Error::NoEvents);
    }
    let arm1_total = records.iter().filter(|r| r.arm == Arm::Experimental).count() as u64;
    if arm1_total == 0 || arm1_total == records.len() as u64 {
        return Err(Error::OneArmMissing);
    }

    let mut sorted: Vec<(f64, bool, Arm)> = records.iter().map(|r| (r.time, r.event, r.arm)).collect();
    sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let mut rows = Vec::new();
    let mut at_risk = records.len() as u64;
    let mut at_risk_arm1 = arm1_total;
    let mut km = 1.0_f64;
    let mut i = 0;
    while i < sorted.len() {
        let tau = sorted[i].0;
        let (mut d, mut d1, mut leaving, mut leaving1) = (0u64, 0u64, 0u64, 0u64);
        while i < sorted.len() && sorted[i].0 == tau {
            let (_, event, arm) = sorted[i];
            let is_arm1 = arm == Arm::Experimental;
            leaving += 1;
            leaving1 += u64::from(is_arm1);
            if event {
                d += 1;
                d1 += u64::from(is_arm1);
            }
            i += 1;
        }
        if d > 0 {
            rows.push(RiskTableRow {
                tau,
                n_total: at_risk,
                n_arm1: at_risk_arm1,
                d_total: d,
                d_arm1: d1,
                km_left: km,
            });
            km *= 1.0 - d as f64 / at_risk as f64;
        }
        at_risk -= leaving;
        at_risk_arm1 -= leaving1;
    }
    Ok(rows)
}

const CSV_HEADER: [&str; 3] = ["time", "event", "arm"];

/// Reads `time,event,arm` CSV. Any malformed line is an error carrying its
/// line number.
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<SurvivalRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_error(&e, 1))?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Csv {
            line: 1,
            reason: format!("expected header `time,event,arm`, got `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut records = Vec::new();
    for result in rdr.records() {
        let row = result.map_err(|e| csv_error(&e, 0))?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |reason: String| Error::Csv { line, reason };
        let time: f64 = row[0].parse().map_err(|_| bad(format!("invalid time `{}`", &row[0])))?;
        if !time.is_finite() || time < 0.0 {
            return Err(bad(format!("time must be finite and >= 0, got `{}`", &row[0])));
        }
        let event = match &row[1] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("event must be 0 or 1, got `{other}`"))),
        };
        let arm = match &row[2] {
            "0" => Arm::Control,
            "1" => Arm::Experimental,
            other => return Err(bad(format!("arm must be 0 or 1, got `{other}`"))),
        };
        records.push(SurvivalRecord { time, event, arm });
    }
    Ok(records)
}

fn csv_error(e: &csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Csv { line, reason: e.to_string() }
}

/// Writes records in the same schema accepted by [`read_csv`]. Times use the
/// shortest representation that round-trips exactly.
pub fn write_csv<W: Write>(records: &[SurvivalRecord], mut out: W) -> Result<()> {
    writeln!(out, "time,event,arm")?;
    for r in records {
        writeln!(out, "{},{},{}", r.time, u8::from(r.event), r.arm.index())?;
    }
    Ok(())
}
