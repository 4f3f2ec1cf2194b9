//! Summaries over per-seed rows, and re-deriving them from a run directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use opencrowd::metrics::{summarize, Summary};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentKind;
use crate::experiment::{SeedReport, SeedRow};
use crate::io::read_json;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub kind: Option<ExperimentKind>,
    pub seeds: usize,
    pub succeeded: usize,
    pub failed: Vec<u64>,
    /// Mean, sample standard deviation and range of each metric over the
    /// seeds that succeeded and report it.
    pub metrics: BTreeMap<String, Summary>,
}

/// Rows are taken in seed order, so a report matches its run bit for bit.
pub fn summarize_rows(kind: Option<ExperimentKind>, rows: &[SeedRow]) -> RunSummary {
    let mut sorted: Vec<&SeedRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.seed);
    let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for row in sorted.iter().filter(|r| r.ok) {
        for (name, v) in row.metrics() {
            if let Some(v) = v {
                values.entry(name).or_default().push(v);
            }
        }
    }
    RunSummary {
        kind,
        seeds: rows.len(),
        succeeded: rows.iter().filter(|r| r.ok).count(),
        failed: sorted.iter().filter(|r| !r.ok).map(|r| r.seed).collect(),
        metrics: values
            .into_iter()
            .filter_map(|(k, v)| summarize(&v).map(|s| (k.to_string(), s)))
            .collect(),
    }
}

/// Seed reports under `dir/seeds` (or `dir` itself), in seed order.
fn seed_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>, CliError> {
    let seeds = dir.join("seeds");
    let root = if seeds.is_dir() { seeds } else { dir.to_path_buf() };
    let entries = fs::read_dir(&root).map_err(|e| CliError::Config(format!("{}: {e}", root.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::Runtime(format!("{}: {e}", root.display())))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(seed) = name.strip_prefix("seed-").and_then(|n| n.strip_suffix(".json")) {
            if let Ok(seed) = seed.parse::<u64>() {
                files.push((seed, path));
            }
        }
    }
    files.sort();
    Ok(files)
}

/// Rebuilds the rows and summary of a run from its seed reports alone.
pub fn report_dir(dir: &Path) -> Result<(Vec<SeedRow>, RunSummary), CliError> {
    let mut rows = Vec::new();
    let mut kinds = Vec::new();
    for (_, path) in seed_files(dir)? {
        let report: SeedReport = read_json(&path)?;
        kinds.push(report.kind);
        rows.push(report.row);
    }
    kinds.dedup();
    let kind = if kinds.len() == 1 { Some(kinds[0]) } else { None };
    let summary = summarize_rows(kind, &rows);
    Ok((rows, summary))
}
