//! Method grammar.
//!
//! ```text
//! method  := weight [ ';' options ]
//!          | 'max(' weight ',' weight [ ';' options ] ')'
//! options := option ( ',' option )*
//! option  := 'k1=' number | 'alpha=' number
//! weight  := 'lr' | 'constant' | 'mw(' number ')' | 'fh(' number ',' number ')'
//! ```
//!
//! `paper6` expands to the six reference methods. Errors carry the byte
//! offset into the original text.

use rmw::harness::{combo_label, paper_methods, DEFAULT_ALPHA};
use rmw::weights::{parse_weight, GrammarError};
use rmw::{ComboSpec, MethodSpec};

pub const PAPER6: &str = "paper6";

/// Parses one method. `paper6` is not accepted here; see [`parse_method_list`].
pub fn parse_method_grammar(text: &str) -> Result<MethodSpec, GrammarError> {
    let lead = text.len() - text.trim_start().len();
    let body = text.trim();
    if body.is_empty() {
        return Err(GrammarError::new(0, "empty method"));
    }
    let spec = if let Some(rest) = strip_prefix_ci(body, "max(") {
        match closing_paren(rest) {
            Some(i) if i + 1 == rest.len() => {}
            Some(i) => return Err(GrammarError::new(lead + 4 + i + 1, "unexpected text after `max(...)`")),
            None => return Err(GrammarError::new(lead + body.len(), "expected `)` closing `max(`")),
        }
        let inner = &rest[..rest.len() - 1];
        let inner_offset = lead + 4;
        let parts = split_top_level(inner, ';');
        if parts.len() > 2 {
            return Err(GrammarError::new(inner_offset + parts[2].0 - 1, "more than one `;`"));
        }
        let (weights_offset, weights_text) = parts[0];
        let weights: Vec<(usize, &str)> = split_top_level(weights_text, ',')
            .into_iter()
            .map(|(off, w)| (weights_offset + off, w))
            .collect();
        if weights.len() != 2 || weights.iter().any(|(_, w)| w.trim().is_empty()) {
            return Err(GrammarError::new(
                inner_offset,
                format!("max() takes exactly 2 weights, got {}", weights.len()),
            ));
        }
        let w1 = parse_weight(weights[0].1).map_err(|e| e.shifted(inner_offset + weights[0].0))?;
        let w2 = parse_weight(weights[1].1).map_err(|e| e.shifted(inner_offset + weights[1].0))?;
        let (k1, alpha) = match parts.get(1) {
            Some(&(off, opts)) => parse_options(opts, inner_offset + off, true)?,
            None => (0.5, DEFAULT_ALPHA),
        };
        build(w1, w2, k1, alpha, lead)?
    } else {
        let parts = split_top_level(body, ';');
        if parts.len() > 2 {
            return Err(GrammarError::new(lead + parts[2].0 - 1, "more than one `;`"));
        }
        let w = parse_weight(parts[0].1).map_err(|e| e.shifted(lead))?;
        let alpha = match parts.get(1) {
            Some(&(off, opts)) => parse_options(opts, lead + off, false)?.1,
            None => DEFAULT_ALPHA,
        };
        build(w, w, 1.0, alpha, lead)?
    };
    Ok(MethodSpec::new(combo_label(&spec), spec))
}

/// Expands `paper6` or parses a single method.
pub fn parse_method_list(text: &str) -> Result<Vec<MethodSpec>, GrammarError> {
    if text.trim().eq_ignore_ascii_case(PAPER6) {
        return paper_methods(DEFAULT_ALPHA).map_err(|e| GrammarError::new(0, e.to_string()));
    }
    parse_method_grammar(text).map(|m| vec![m])
}

fn build(w1: rmw::WeightSpec, w2: rmw::WeightSpec, k1: f64, alpha: f64, offset: usize) -> Result<ComboSpec, GrammarError> {
    ComboSpec::new(w1, w2, k1, alpha).map_err(|e| GrammarError::new(offset, e.to_string()))
}

fn strip_prefix_ci<'a>(text: &'a str, prefix: &str) -> Option<&'a str> {
    let head = text.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &text[prefix.len()..])
}

/// Index of the `)` that closes an already opened parenthesis.
fn closing_paren(text: &str) -> Option<usize> {
    let mut depth = 1i32;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Splits on `sep` outside parentheses, keeping each piece's byte offset.
fn split_top_level(text: &str, sep: char) -> Vec<(usize, &str)> {
    let mut pieces = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                pieces.push((start, &text[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    pieces.push((start, &text[start..]));
    pieces
}

fn parse_options(text: &str, offset: usize, allow_k1: bool) -> Result<(f64, f64), GrammarError> {
    let (mut k1, mut alpha) = (None, None);
    for (off, item) in split_top_level(text, ',') {
        let at = offset + off + (item.len() - item.trim_start().len());
        let item = item.trim();
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| GrammarError::new(at, format!("expected `key=value`, got `{item}`")))?;
        let value_at = at + key.len() + 1 + (value.len() - value.trim_start().len());
        let number: f64 = value
            .trim()
            .parse()
            .map_err(|_| GrammarError::new(value_at, format!("expected a number, got `{}`", value.trim())))?;
        let slot = match key.trim() {
            "k1" if allow_k1 => &mut k1,
            "alpha" => &mut alpha,
            other => {
                let expected = if allow_k1 { "`k1` or `alpha`" } else { "`alpha`" };
                return Err(GrammarError::new(at, format!("unknown option `{other}`, expected {expected}")));
            }
        };
        if slot.replace(number).is_some() {
            return Err(GrammarError::new(at, format!("option `{}` given twice", key.trim())));
        }
        if key.trim() == "k1" && !(0.0..=1.0).contains(&number) {
            return Err(GrammarError::new(value_at, format!("k1 = {number} is outside [0, 1]; k2 = 1 - k1 must be a valid share of alpha")));
        }
        if key.trim() == "alpha" && !(number > 0.0 && number < 0.5) {
            return Err(GrammarError::new(value_at, format!("alpha = {number} is outside (0, 0.5)")));
        }
    }
    Ok((k1.unwrap_or(0.5), alpha.unwrap_or(DEFAULT_ALPHA)))
}
