//! Weight functions evaluated at each event time from the pooled left-limit
//! Kaplan-Meier estimate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::RiskTableRow;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightSpec {
    /// Standard log-rank: every event time weighted 1.
    Constant,
    /// `1 / max(S(t-), s_star)`: starts at 1 and rises to `1 / s_star`.
    Modest { s_star: f64 },
    /// `S(t-)^rho * (1 - S(t-))^gamma`.
    FlemingHarrington { rho: f64, gamma: f64 },
}

impl WeightSpec {
    pub fn modest(s_star: f64) -> Result<Self> {
        let spec = WeightSpec::Modest { s_star };
        spec.validate()?;
        Ok(spec)
    }

    pub fn fleming_harrington(rho: f64, gamma: f64) -> Result<Self> {
        let spec = WeightSpec::FlemingHarrington { rho, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightSpec::Constant => Ok(()),
            WeightSpec::Modest { s_star } if s_star > 0.0 && s_star <= 1.0 => Ok(()),
            WeightSpec::Modest { s_star } => {
                Err(Error::InvalidWeight(format!("modest weights need 0 < s* <= 1, got {s_star}")))
            }
            WeightSpec::FlemingHarrington { rho, gamma } if rho >= 0.0 && gamma >= 0.0 && rho.is_finite() && gamma.is_finite() => {
                Ok(())
            }
            WeightSpec::FlemingHarrington { rho, gamma } => Err(Error::InvalidWeight(format!(
                "Fleming-Harrington weights need rho >= 0 and gamma >= 0, got ({rho}, {gamma})"
            ))),
        }
    }

    /// Weight at a single event time given the pooled `S(t-)`.
    #[inline]
    pub fn weight_at(&self, km_left: f64) -> f64 {
        match *self {
            WeightSpec::Constant => 1.0,
            WeightSpec::Modest { s_star } => 1.0 / km_left.max(s_star),
            WeightSpec::FlemingHarrington { rho, gamma } => pow0(km_left, rho) * pow0(1.0 - km_left, gamma),
        }
    }
}

/// `x^p` with `0^0 = 1`, so FH(0,0) is exactly the log-rank weight.
#[inline]
fn pow0(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        x.powf(p)
    }
}

/// One weight per risk-table row.
pub fn evaluate_weights(spec: &WeightSpec, table: &[RiskTableRow]) -> Vec<f64> {
    table.iter().map(|row| spec.weight_at(row.km_left)).collect()
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Constant => f.write_str("lr"),
            WeightSpec::Modest { s_star } => write!(f, "mw({s_star})"),
            WeightSpec::FlemingHarrington { rho, gamma } => write!(f, "fh({rho},{gamma})"),
        }
    }
}

/// Parse failure annotated with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("at byte {offset}: {message}")]
pub struct GrammarError {
    pub offset: usize,
    pub message: String,
}

impl GrammarError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        Self { offset, message: message.into() }
    }

    pub fn shifted(mut self, by: usize) -> Self {
        self.offset += by;
        self
    }
}

/// Parses `constant` / `lr`, `mw(0.5)` / `mw(s*=0.5)` and `fh(0,0.5)` /
/// `fh(rho=0,gamma=0.5)`. Surrounding whitespace is ignored.
pub fn parse_weight(text: &str) -> std::result::Result<WeightSpec, GrammarError> {
    let lead = text.len() - text.trim_start().len();
    let body = text.trim();
    let (name, args) = match body.find('(') {
        None => (body, None),
        Some(open) => {
            if !body.ends_with(')') {
                return Err(GrammarError::new(lead + body.len(), "expected `)`"));
            }
            (body[..open].trim_end(), Some((open + 1, &body[open + 1..body.len() - 1])))
        }
    };
    let args = match args {
        None => Vec::new(),
        Some((start, inner)) => parse_args(inner).map_err(|e| e.shifted(lead + start))?,
    };
    let arity = |n: usize| -> std::result::Result<(), GrammarError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(GrammarError::new(lead, format!("`{name}` takes {n} argument(s), got {}", args.len())))
        }
    };
    let check_key = |i: usize, allowed: &[&str]| -> std::result::Result<f64, GrammarError> {
        let (offset, key, value) = &args[i];
        match key {
            Some(k) if !allowed.contains(&k.as_str()) => Err(GrammarError::new(
                lead + *offset,
                format!("unexpected parameter `{k}`, expected one of {allowed:?}"),
            )),
            _ => Ok(*value),
        }
    };
    let spec = match name.to_ascii_lowercase().as_str() {
        "constant" | "lr" | "logrank" => {
            if !args.is_empty() {
                return Err(GrammarError::new(lead, format!("`{name}` takes no arguments")));
            }
            WeightSpec::Constant
        }
        "mw" | "modest" => {
            arity(1)?;
            WeightSpec::Modest { s_star: check_key(0, &["s*", "s", "s_star"])? }
        }
        "fh" => {
            arity(2)?;
            WeightSpec::FlemingHarrington {
                rho: check_key(0, &["rho"])?,
                gamma: check_key(1, &["gamma"])?,
            }
        }
        "" => return Err(GrammarError::new(lead, "expected a weight name")),
        other => {
            return Err(GrammarError::new(
                lead,
                format!("unknown weight family `{other}`; expected constant, lr, mw(s*) or fh(rho,gamma)"),
            ))
        }
    };
    spec.validate().map_err(|e| GrammarError::new(lead, e.to_string()))?;
    Ok(spec)
}

type Arg = (usize, Option<String>, f64);

fn parse_args(inner: &str) -> std::result::Result<Vec<Arg>, GrammarError> {
    let mut out = Vec::new();
    let mut start = 0;
    for piece in inner.split(',') {
        let lead = piece.len() - piece.trim_start().len();
        let offset = start + lead;
        let piece_t = piece.trim();
        let (key, value) = match piece_t.split_once('=') {
            Some((k, v)) => (Some(k.trim().to_string()), v.trim()),
            None => (None, piece_t),
        };
        let value_offset = offset + piece_t.len() - value.len();
        let parsed: f64 = value
            .parse()
            .map_err(|_| GrammarError::new(value_offset, format!("expected a number, got `{value}`")))?;
        if !parsed.is_finite() {
            return Err(GrammarError::new(value_offset, "parameter must be finite"));
        }
        out.push((offset, key, parsed));
        start += piece.len() + 1;
    }
    Ok(out)
}

impl FromStr for WeightSpec {
    type Err = GrammarError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse_weight(s)
    }
}
