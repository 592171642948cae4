//! Flat `key = value` text parsing shared by the config surfaces.

use crate::error::{Error, Result};

/// Parses `key = value` lines. `#` starts a comment; blank lines are
/// skipped. Returns pairs in file order; duplicate keys are allowed and the
/// caller decides the policy (last-wins everywhere in this crate).
pub(crate) fn parse_kv_lines(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

pub(crate) fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("invalid value `{value}` for key `{key}`")))
}

pub(crate) fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_field(key, s))
        .collect()
}
