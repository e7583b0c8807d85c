//! Report emission. JSON objects are written with lexicographically sorted
//! keys and every floating-point number with 17 significant digits, so
//! reports are byte-stable and doubles round-trip exactly.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Number, Value};
use strongweights_core::theorems::VerdictReport;
use strongweights_core::{Error, Result};

/// Everything a command produced.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// The configuration actually used, after defaults and overrides.
    pub config: Value,
    pub results: Vec<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
    /// Seconds since the Unix epoch; absent in deterministic mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl Report {
    pub fn new(command: &str, config: Value, deterministic: bool) -> Self {
        let timestamp = (!deterministic).then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        });
        Self {
            tool: "strongweights".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            results: Vec::new(),
            summary: None,
            timestamp,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }
}

/// Serializes anything to canonical JSON.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::InvalidInput(format!("cannot serialize report: {e}")))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

/// `x` with 17 significant digits: plain notation for moderate exponents,
/// scientific otherwise. Always contains a `.` or `e` so it reads back as
/// a float.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(1) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{mantissa}e{exp}")
    }
}

fn write_number(out: &mut String, n: &Number) {
    if n.is_f64() {
        out.push_str(&format_f64(n.as_f64().expect("f64 number")));
    } else {
        out.push_str(&n.to_string());
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, item, level + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                indent(out, level + 1);
                let _ = write!(out, "{}: ", serde_json::to_string(k).expect("keys serialize"));
                write_value(out, &map[k.as_str()], level + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push('}');
        }
    }
}

/// CSV header for verdict tables.
pub const CSV_COLUMNS: [&str; 6] = ["theorem_id", "seed", "epsilon", "worst_ratio", "witness", "status"];

fn optional(x: Option<f64>) -> String {
    x.filter(|v| v.is_finite()).map(format_f64).unwrap_or_default()
}

/// One row per verdict, ordered by instance id (ties keep their order).
/// `epsilon` holds the verdict's parameter; the witness is written as
/// `[lo,hi]` per axis joined by `x`.
pub fn verdicts_to_csv(verdicts: &[VerdictReport]) -> Result<String> {
    let mut rows: Vec<&VerdictReport> = verdicts.iter().collect();
    rows.sort_by_key(|v| v.instance.id);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidInput(format!("cannot write csv: {e}"));
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for v in rows {
        let witness = v
            .witness
            .as_ref()
            .map(|r| {
                r.lo.iter()
                    .zip(&r.hi)
                    .map(|(a, b)| format!("[{},{}]", format_f64(*a), format_f64(*b)))
                    .collect::<Vec<_>>()
                    .join("x")
            })
            .unwrap_or_default();
        w.write_record([
            v.theorem.clone(),
            v.instance.seed.to_string(),
            optional(v.parameter),
            optional(v.worst_ratio),
            witness,
            v.status.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("cannot write csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(format!("csv is not UTF-8: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_f64(1.125), "1.1250000000000000");
        assert_eq!(format_f64(0.1), "0.10000000000000001");
        assert_eq!(format_f64(1.0 / 18.0), "0.055555555555555552");
        assert_eq!(format_f64(2e20), "2.0000000000000000e20");
        assert_eq!(format_f64(-3e-7), "-2.9999999999999999e-7");
        for x in [0.1, 1.0 / 3.0, 6.02e23, 1e-300, -7.5, 123456.789] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn keys_are_sorted() {
        let s = to_canonical_json(&json!({"b": 1, "a": {"d": 2.5, "c": []}})).unwrap();
        assert_eq!(s, "{\n  \"a\": {\n    \"c\": [],\n    \"d\": 2.5000000000000000\n  },\n  \"b\": 1\n}\n");
    }
}
