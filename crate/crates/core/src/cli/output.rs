//! Machine-readable records and their JSON / CSV / table renderings.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bounds::BoundKind;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Table,
}

/// Inputs echoed into every record. Thread count is deliberately absent so
/// output does not depend on it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub lambda: f64,
    pub rho: f64,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k_min: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<BoundKind>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub burn_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon_halt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub schema_version: String,
    pub command: String,
    pub inputs: Inputs,
    pub results: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
}

impl OutputRecord {
    pub fn new(command: &str, inputs: Inputs) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            inputs,
            results: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    /// Inserts a finite float; non-finite values are dropped with a warning.
    pub fn put_f64(&mut self, key: &str, v: f64) {
        match serde_json::Number::from_f64(v) {
            Some(n) => {
                self.results.insert(key.to_string(), Value::Number(n));
            }
            None => self
                .warnings
                .push(format!("{key} is not finite ({v}); omitted")),
        }
    }

    pub fn put_u64(&mut self, key: &str, v: u64) {
        self.results.insert(key.to_string(), Value::from(v));
    }

    pub fn put_str(&mut self, key: &str, v: &str) {
        self.results.insert(key.to_string(), Value::from(v));
    }

    pub fn put_null(&mut self, key: &str) {
        self.results.insert(key.to_string(), Value::Null);
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits);
        self.serialize(&mut ser).expect("in-memory serialization");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

/// Full precision: 17 significant digits in scientific notation.
pub fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Human-readable: 6 significant digits.
pub fn fmt_short(v: f64) -> String {
    format!("{v:.5e}")
}

/// Compact JSON whose floats carry 17 significant digits, matching the CSV.
struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_full(value).as_bytes())
    }
}

fn cell(v: &Value, short: bool) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            if short {
                fmt_short(x)
            } else {
                fmt_full(x)
            }
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes records in the requested format. CSV rows follow `columns`; the
/// table view lists every result of every record.
pub fn emit<W: Write>(
    out: &mut W,
    format: Format,
    records: &[OutputRecord],
    columns: &[&str],
) -> io::Result<()> {
    match format {
        Format::Json => {
            for r in records {
                writeln!(out, "{}", r.to_json())?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(columns)?;
            for r in records {
                w.write_record(columns.iter().map(|c| {
                    r.results
                        .get(*c)
                        .map(|v| cell(v, false))
                        .unwrap_or_default()
                }))?;
            }
            out.write_all(&w.into_inner().map_err(|e| e.into_error())?)?;
        }
        Format::Table => {
            for (i, r) in records.iter().enumerate() {
                if i > 0 {
                    writeln!(out)?;
                }
                let width = r.results.keys().map(String::len).max().unwrap_or(0);
                for (key, v) in &r.results {
                    let shown = if v.is_null() {
                        "n/a".to_string()
                    } else {
                        cell(v, true)
                    };
                    writeln!(out, "{key:<width$}  {shown}")?;
                }
            }
        }
    }
    for r in records {
        for w in &r.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(())
}
