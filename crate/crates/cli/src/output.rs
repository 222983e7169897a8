//! CSV tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{value_text, RunConfig};
use crate::run::Table;

/// 15 significant digits in scientific notation.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        // no negative zero in files
        return format!("{:.14e}", 0.0);
    }
    format!("{x:.14e}")
}

pub fn render_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

pub fn table_csv(t: &Table) -> String {
    let rows: Vec<Vec<String>> = t.rows.iter().map(|r| r.iter().map(|&x| format_number(x)).collect()).collect();
    render_csv(&t.header, &rows)
}

/// Sweep summary: swept values as leading columns, then each entry's summary row.
pub fn summary_csv(keys: &[String], entries: &[(Vec<(String, Value)>, &Table)]) -> String {
    let mut header: Vec<String> = keys.to_vec();
    if let Some((_, t)) = entries.first() {
        header.extend(t.header.iter().cloned());
    }
    let mut rows = Vec::new();
    for (label, t) in entries {
        for r in &t.rows {
            let mut row: Vec<String> = label
                .iter()
                .map(|(_, v)| match v.as_f64() {
                    Some(x) => format_number(x),
                    None => value_text(v),
                })
                .collect();
            row.extend(r.iter().map(|&x| format_number(x)));
            rows.push(row);
        }
    }
    render_csv(&header, &rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryRecord {
    pub label: Map<String, Value>,
    pub metrics: Map<String, Value>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub tolerances: Value,
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub entries: Vec<EntryRecord>,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `text` to `dir/name` and returns its record.
pub fn write_file(dir: &Path, name: &str, text: &str) -> std::io::Result<OutputRecord> {
    let path: PathBuf = dir.join(name);
    fs::write(&path, text)?;
    Ok(OutputRecord {
        file: name.to_string(),
        sha256: sha256_hex(text.as_bytes()),
        rows: text.lines().count().saturating_sub(1),
    })
}
