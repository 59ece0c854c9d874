//! Tables and their CSV/JSON serialization.
//!
//! Every number leaves the crate with 12 significant digits. CSV uses a
//! header row, `.` as decimal separator and `\n` line endings. JSON is an
//! object `{"points": [...], "meta": {...}}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats like C's `%.12g`: fixed notation for exponents in `[-4, 12)`,
/// scientific otherwise, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to the value its 12-digit rendering parses back to.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    fmt_sig(x).parse().expect("fmt_sig output parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::domain(format!("unknown format '{other}', expected csv or json"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

/// A rectangular table of numbers with named columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::domain(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| fmt_sig(x))).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::numeric(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::numeric(format!("csv: {e}")))
    }

    /// Rows as JSON objects keyed by column name.
    pub fn points(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().zip(row).map(|(c, &x)| (c.clone(), json_number(x))).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn to_json(&self, meta: &Value) -> Result<String> {
        json_document(self.points(), meta)
    }
}

/// A finite number rounded to 12 significant digits, or `null`. Integral
/// values are written without a fractional part.
pub fn json_number(x: f64) -> Value {
    let r = round_sig(x);
    if r.fract() == 0.0 && r.abs() < 2f64.powi(53) {
        return Value::from(r as i64);
    }
    serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
}

/// `{"points": points, "meta": meta}` with every float in `meta` rounded
/// like the points, pretty-printed and newline-terminated.
pub fn json_document(points: Value, meta: &Value) -> Result<String> {
    let mut doc = Map::new();
    doc.insert("points".into(), points);
    doc.insert("meta".into(), round_floats(meta.clone()));
    let mut s = serde_json::to_string_pretty(&Value::Object(doc))
        .map_err(|e| Error::numeric(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => json_number(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

/// Writes `contents` to a temporary file beside `path` and renames it into
/// place, so readers never see a partial file.
#[cfg(feature = "cli")]
pub fn write_atomic(path: &std::path::Path, contents: &str) -> std::io::Result<()> {
    use std::io::Write;
    use std::path::Path;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn io_err(e: csv::Error) -> Error {
    Error::numeric(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_like_printf_g() {
        assert_eq!(fmt_sig(40f64.log2()), "5.32192809489");
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(25.0), "25");
        assert_eq!(fmt_sig(-0.001234), "-0.001234");
        assert_eq!(fmt_sig(0.0001), "0.0001");
        assert_eq!(fmt_sig(1.37313264161e-5), "1.37313264161e-05");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-07");
        assert_eq!(fmt_sig(1e12), "1e+12");
        assert_eq!(fmt_sig(123456789012.0), "123456789012");
        assert_eq!(fmt_sig(0.1 + 0.2), "0.3");
        assert_eq!(fmt_sig(f64::NAN), "nan");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(["loss_db", "K_opt"]);
        assert_eq!(t.to_csv().unwrap(), "loss_db,K_opt\n");
    }

    #[test]
    fn one_row_follows_header_order() {
        let mut t = Table::new(["loss_db", "chi_d_opt", "K_opt"]);
        t.push(vec![2.5, 0.125, -1.0]).unwrap();
        assert_eq!(t.to_csv().unwrap(), "loss_db,chi_d_opt,K_opt\n2.5,0.125,-1\n");
        assert!(t.push(vec![1.0]).is_err());
    }

    #[test]
    fn json_has_points_and_meta() {
        let mut t = Table::new(["a"]);
        t.push(vec![1.0 / 3.0]).unwrap();
        t.push(vec![f64::NAN]).unwrap();
        let s = t.to_json(&serde_json::json!({"v": 2.0f64.sqrt()})).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["points"][0]["a"].as_f64().unwrap(), 0.333333333333);
        assert!(v["points"][1]["a"].is_null());
        assert_eq!(v["meta"]["v"].to_string(), "1.41421356237");
    }

    #[cfg(feature = "cli")]
    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, "old\n").unwrap();
        write_atomic(&p, "new\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "new\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    proptest! {
        #[test]
        fn round_sig_is_idempotent(x in -1e9f64..1e9) {
            let r = round_sig(x);
            prop_assert_eq!(round_sig(r), r);
            prop_assert_eq!(fmt_sig(r), fmt_sig(x));
            prop_assert!((r - x).abs() <= 1e-11 * x.abs().max(1e-300));
        }
    }
}
