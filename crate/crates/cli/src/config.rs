//! `key = value` configuration files.
//!
//! Keys are the long flag names (`-` and `_` are interchangeable). Lists are
//! comma-separated. Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;

use serde_json::{Map, Number, Value};

use crate::error::{CliError, CliResult};

pub fn parse(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Parse(format!("config line {}: expected key = value", i + 1)));
        };
        let key = key.trim().replace('-', "_");
        if key.is_empty() {
            return Err(CliError::Parse(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(key.clone(), value.trim().to_owned()).is_some() {
            return Err(CliError::Parse(format!("config line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(out)
}

fn scalar(key: &str, raw: &str, like: &Value) -> CliResult<Value> {
    let bad = |what: &str| CliError::Validation(format!("config key {key}: {raw:?} is not {what}"));
    Ok(match like {
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad("a boolean"))?),
        Value::Number(n) if n.is_u64() => Value::Number(raw.parse::<u64>().map_err(|_| bad("a non-negative integer"))?.into()),
        Value::Number(_) => {
            let x: f64 = raw.parse().map_err(|_| bad("a number"))?;
            Value::Number(Number::from_f64(x).ok_or_else(|| bad("a finite number"))?)
        }
        Value::String(_) => Value::String(raw.to_owned()),
        // Unset optional: keep numbers numeric, anything else as text.
        _ => match raw.parse::<u64>() {
            Ok(u) => Value::Number(u.into()),
            Err(_) => match raw.parse::<f64>().ok().and_then(Number::from_f64) {
                Some(n) => Value::Number(n),
                None => Value::String(raw.to_owned()),
            },
        },
    })
}

/// Overrides fields of `target` (a JSON object) with the entries of
/// `config`, converting each value to the field's current type. Returns the
/// keys that matched.
pub fn apply(target: &mut Map<String, Value>, config: &BTreeMap<String, String>) -> CliResult<Vec<String>> {
    let mut used = Vec::new();
    for (key, raw) in config {
        let Some(slot) = target.get_mut(key) else {
            continue;
        };
        *slot = match &*slot {
            Value::Array(items) => {
                let like = items.first().cloned().unwrap_or(Value::Null);
                Value::Array(
                    raw.split(',')
                        .map(|part| scalar(key, part.trim(), &like))
                        .collect::<CliResult<_>>()?,
                )
            }
            like => scalar(key, raw, like)?,
        };
        used.push(key.clone());
    }
    Ok(used)
}
