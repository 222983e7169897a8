//! Configuration-driven runs of the gaugelink solvers with CSV and manifest output.

pub mod config;
pub mod output;
pub mod recipes;
pub mod run;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{Map, Value};

use config::{ConfigError, RunConfig};
use output::{summary_csv, table_csv, write_file, EntryRecord, RunManifest};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug)]
pub enum AppError {
    Config(ConfigError),
    Numerical(gaugelink_core::Error),
    Io(std::io::Error),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Numerical(_) | AppError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(e) => write!(f, "{e}"),
            AppError::Numerical(e) => write!(f, "numerical failure: {e}"),
            AppError::Io(e) => write!(f, "output error: {e}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e)
    }
}

/// Sweep parallelism from `GAUGELINK_THREADS`, defaulting to rayon's choice.
pub fn thread_cap() -> Option<usize> {
    std::env::var("GAUGELINK_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn file_stem(cfg: &RunConfig) -> String {
    cfg.subcommand.name().replace('-', "_")
}

/// Runs every entry of `cfg`, writes CSVs and the manifest into `cfg.output_dir`.
pub fn execute(cfg: &RunConfig) -> Result<RunManifest, AppError> {
    let start = Instant::now();
    let entries = cfg.entries()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| AppError::Io(std::io::Error::other(e)))?;
    let threads = pool.current_num_threads();
    let outcomes: Vec<_> = pool.install(|| {
        entries
            .par_iter()
            .map(|e| run::execute(&e.params))
            .collect::<Result<Vec<_>, _>>()
    })
    .map_err(AppError::Numerical)?;

    let dir = cfg.output_dir.as_path();
    std::fs::create_dir_all(dir)?;
    let stem = file_stem(cfg);
    let mut outputs = Vec::new();
    let mut records = Vec::new();
    for (entry, outcome) in entries.iter().zip(&outcomes) {
        let suffix = entry.suffix();
        let name = if suffix.is_empty() { format!("{stem}.csv") } else { format!("{stem}_{suffix}.csv") };
        outputs.push(write_file(dir, &name, &table_csv(&outcome.table))?);
        let label: Map<String, Value> = entry.label.iter().cloned().collect();
        records.push(EntryRecord {
            label,
            metrics: outcome.metrics.clone(),
            notes: outcome.notes.clone(),
        });
    }
    if !cfg.sweep.is_empty() {
        let keys: Vec<String> = cfg.sweep.iter().map(|a| a.key.clone()).collect();
        let rows: Vec<_> = entries
            .iter()
            .zip(&outcomes)
            .filter_map(|(e, o)| o.summary.as_ref().map(|s| (e.label.clone(), s)))
            .collect();
        if rows.len() == entries.len() {
            outputs.push(write_file(dir, &format!("{stem}_sweep.csv"), &summary_csv(&keys, &rows))?);
        }
    }
    let manifest = RunManifest {
        artifact: "gaugelink",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        tolerances: run::tolerances(&entries[0].params),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        threads,
        entries: records,
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join(MANIFEST_NAME), text + "\n")?;
    Ok(manifest)
}

/// Parses a recipe by name, pointing its output at `dir`.
pub fn recipe_config(name: &str, dir: &Path) -> Result<RunConfig, ConfigError> {
    let r = recipes::find(name).ok_or_else(|| ConfigError::Invalid {
        key: "recipe".into(),
        message: format!("no recipe named `{name}`"),
    })?;
    let mut cfg = config::parse_config_str(r.text, None)?;
    cfg.output_dir = dir.to_path_buf();
    Ok(cfg)
}
