//! Summary JSON with fixed precision, and CSV time series.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds a float to `SIGNIFICANT_DIGITS` significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                *v = serde_json::Number::from_f64(round_sig(x)).map(Value::Number).unwrap_or(Value::Null);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and rounded floats; non-finite numbers become null.
pub fn summary_json<T: Serialize>(summary: &T) -> Result<String, CliError> {
    let mut v = serde_json::to_value(summary).map_err(|e| CliError::Io(e.to_string()))?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_summary<T: Serialize>(dir: &Path, summary: &T) -> Result<String, CliError> {
    let text = summary_json(summary)?;
    write_file(&dir.join("summary.json"), text.as_bytes())?;
    Ok(text)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes rows under a header; floats in full round-trip precision.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|x| format!("{x:e}"))).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(1.234567890123456), 1.23456789012);
        assert_eq!(round_sig(-9.87654321098765e-7), -9.87654321099e-7);
        assert_eq!(round_sig(0.0), 0.0);
    }

    #[test]
    fn nan_becomes_null_and_integers_stay() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            n: u64,
        }
        let j = summary_json(&S { a: f64::NAN, n: 7 }).unwrap();
        assert!(j.contains("\"a\": null"));
        assert!(j.contains("\"n\": 7"));
    }
}
