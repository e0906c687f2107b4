//! Flat TOML parameter files. Keys are the long flag names; `_` and `-` are
//! interchangeable. Command-line flags take precedence.

use std::path::Path;

use toml::{Table, Value};

const KNOWN_KEYS: &[&str] = &[
    "preset",
    "lambda",
    "block-interval",
    "rho",
    "delta",
    "format",
    "k",
    "k-min",
    "k-max",
    "target",
    "bound",
    "mode",
    "trials",
    "seed",
    "burn-in",
    "epsilon-halt",
    "threads",
];

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    table: Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let raw: Table = text
            .parse()
            .map_err(|e: toml::de::Error| e.message().to_string())?;
        let mut table = Table::new();
        for (key, value) in raw {
            let norm = key.replace('_', "-");
            if !KNOWN_KEYS.contains(&norm.as_str()) {
                return Err(format!("unknown key {key:?}"));
            }
            if matches!(value, Value::Table(_) | Value::Array(_)) {
                return Err(format!("key {key:?} must be a scalar"));
            }
            if table.insert(norm, value).is_some() {
                return Err(format!("key {key:?} given twice"));
            }
        }
        Ok(Self { table })
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, String> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(format!(
                "config key {key:?}: expected a number, got {other}"
            )),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, String> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) => u64::try_from(*i)
                .map(Some)
                .map_err(|_| format!("config key {key:?}: {i} is negative")),
            Some(other) => Err(format!(
                "config key {key:?}: expected a non-negative integer, got {other}"
            )),
        }
    }

    pub fn get_str(&self, key: &str) -> Result<Option<String>, String> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(format!(
                "config key {key:?}: expected a string, got {other}"
            )),
        }
    }
}
