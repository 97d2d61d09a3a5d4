//! Helpers for the `family:key=value,...` strings used by configs and the CLI.

use crate::error::{Error, Result};

/// Splits `a=1,b=ramp(0,1),c=2` on top-level commas into key/value pairs.
pub(crate) fn key_values(body: &str) -> Result<Vec<(String, String)>> {
    split_top_level(body)
        .into_iter()
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::parse(item.clone(), "expected `key=value`"))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

/// Splits on commas that are not nested inside parentheses.
pub(crate) fn split_top_level(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in body.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                if !cur.trim().is_empty() {
                    out.push(cur.trim().to_string());
                }
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// `key` may be a bare key or the whole `key=value` item; errors quote the item.
fn item(key: &str, v: &str) -> String {
    if key.contains('=') {
        key.to_string()
    } else {
        format!("{key}={}", v.trim())
    }
}

pub(crate) fn number(key: &str, v: &str) -> Result<f64> {
    let x = v
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::parse(item(key, v), e.to_string()))?;
    if !x.is_finite() {
        return Err(Error::parse(item(key, v), "value must be finite"));
    }
    Ok(x)
}

pub(crate) fn integer(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|e| Error::parse(item(key, v), e.to_string()))
}
