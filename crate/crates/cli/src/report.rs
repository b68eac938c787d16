//! Report serialization: JSON with fixed 17-significant-digit floats, CSV
//! traces, and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gdm_core::VerifyReport;
use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Formats `v` with 17 significant digits; non-finite values become null.
pub fn number(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    Number::from_str(&format_float(v)).map_or(Value::Null, Value::Number)
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn check_json(r: &VerifyReport<f64>) -> Value {
    let mut m = Map::new();
    m.insert("name".into(), Value::String(r.name.clone()));
    m.insert("lhs".into(), number(r.lhs));
    m.insert("rhs".into(), number(r.rhs));
    m.insert("margin".into(), number(r.margin));
    m.insert("pass".into(), Value::Bool(r.pass));
    m.insert("applicable".into(), Value::Bool(r.applicable));
    m.insert("inconclusive".into(), Value::Bool(r.inconclusive));
    m.insert("context".into(), Value::String(r.context.clone()));
    Value::Object(m)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json values always serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// CSV with a header row; every cell is a float at 17 significant digits.
pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

pub fn artifact(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
