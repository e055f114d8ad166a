//! Typed output rows and their JSONL/CSV serialization.
//!
//! JSONL carries full-precision floats (17 significant digits, exact
//! round-trip); CSV is the skimmable companion at 10 digits. Files are
//! written atomically (temp file + rename) so a crashed run never leaves a
//! torn output behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use mfld_core::util::{fmt_g10, fmt_g17};

#[derive(Debug, Clone)]
pub enum Value {
    U(u64),
    F(f64),
    B(bool),
    S(String),
}

#[derive(Debug, Clone, Default)]
pub struct Row {
    pub fields: Vec<(&'static str, Value)>,
}

impl Row {
    pub fn new() -> Self {
        Row { fields: Vec::new() }
    }

    pub fn u(mut self, key: &'static str, v: u64) -> Self {
        self.fields.push((key, Value::U(v)));
        self
    }

    pub fn f(mut self, key: &'static str, v: f64) -> Self {
        self.fields.push((key, Value::F(v)));
        self
    }

    pub fn b(mut self, key: &'static str, v: bool) -> Self {
        self.fields.push((key, Value::B(v)));
        self
    }

    pub fn s(mut self, key: &'static str, v: impl Into<String>) -> Self {
        self.fields.push((key, Value::S(v.into())));
        self
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

fn json_value(v: &Value) -> String {
    match v {
        Value::U(x) => x.to_string(),
        // JSON has no non-finite numbers; encode them as strings
        Value::F(x) if x.is_finite() => fmt_g17(*x),
        Value::F(x) => format!("\"{x}\""),
        Value::B(x) => x.to_string(),
        Value::S(x) => format!("\"{}\"", json_escape(x)),
    }
}

fn csv_value(v: &Value) -> String {
    match v {
        Value::U(x) => x.to_string(),
        Value::F(x) if x.is_finite() => fmt_g10(*x),
        Value::F(x) => x.to_string(),
        Value::B(x) => x.to_string(),
        Value::S(x) => {
            if x.contains(',') || x.contains('"') || x.contains('\n') {
                format!("\"{}\"", x.replace('"', "\"\""))
            } else {
                x.clone()
            }
        }
    }
}

pub fn to_jsonl(rows: &[Row]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push('{');
        for (i, (k, v)) in row.fields.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "\"{}\":{}", json_escape(k), json_value(v));
        }
        out.push_str("}\n");
    }
    out
}

pub fn to_csv(rows: &[Row]) -> Result<String> {
    let mut out = String::new();
    let Some(first) = rows.first() else {
        return Ok(out);
    };
    let header: Vec<&str> = first.fields.iter().map(|(k, _)| *k).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let keys: Vec<&str> = row.fields.iter().map(|(k, _)| *k).collect();
        ensure!(
            keys == header,
            "rows disagree on columns: {header:?} vs {keys:?}"
        );
        let line: Vec<String> = row.fields.iter().map(|(_, v)| csv_value(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Writes `content` to `path` through a temp file in the same directory,
/// then renames into place.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .and_then(|s| s.to_str())
        .context("output path has no file name")?;
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming into place: {}", path.display()))?;
    Ok(())
}

/// Serializes `rows` into `<dir>/<task>.jsonl` / `.csv` per the format
/// selection; returns the paths written.
pub fn write_rows(dir: &Path, task: &str, rows: &[Row], format: crate::Format) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if matches!(format, crate::Format::Jsonl | crate::Format::Both) {
        let path = dir.join(format!("{task}.jsonl"));
        write_atomic(&path, &to_jsonl(rows))?;
        written.push(path);
    }
    if matches!(format, crate::Format::Csv | crate::Format::Both) {
        let path = dir.join(format!("{task}.csv"));
        write_atomic(&path, &to_csv(rows)?)?;
        written.push(path);
    }
    Ok(written)
}
