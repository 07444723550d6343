use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::heuristics::HeuristicPolicy;

use super::{AggregateStats, BenchError, Metric, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// One file per metric: a row per job count, a column per policy, cells
    /// are means.
    TableCsv,
    /// One row per replication and policy.
    BoxplotCsv,
}

impl FromStr for ExportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table-csv" => Ok(ExportFormat::TableCsv),
            "boxplot-csv" => Ok(ExportFormat::BoxplotCsv),
            other => Err(BenchError::Invalid(format!("unknown format {other:?}; use table-csv or boxplot-csv"))),
        }
    }
}

/// Column order: the heuristics in their canonical order, then MADQN, then
/// anything else in order of appearance.
pub fn table_columns(stats: &[AggregateStats]) -> Vec<String> {
    let present = |n: &str| stats.iter().any(|s| s.policy == n);
    let mut cols: Vec<String> = HeuristicPolicy::names().into_iter().filter(|n| present(n)).collect();
    if present("MADQN") {
        cols.push("MADQN".into());
    }
    for s in stats {
        if !cols.contains(&s.policy) {
            cols.push(s.policy.clone());
        }
    }
    cols
}

/// CSV row of the per-replication export. Wall time is left out so that the
/// file is identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub policy: String,
    pub n_jobs: usize,
    pub replication: usize,
    pub seed: u64,
    pub scenario_hash: String,
    pub total_tardiness: f64,
    pub n_tardy: usize,
    pub total_energy: f64,
}

impl From<&RunResult> for BoxplotRow {
    fn from(r: &RunResult) -> Self {
        Self {
            policy: r.policy.clone(),
            n_jobs: r.n_jobs,
            replication: r.replication,
            seed: r.seed,
            scenario_hash: r.scenario_hash.clone(),
            total_tardiness: r.total_tardiness,
            n_tardy: r.n_tardy,
            total_energy: r.total_energy,
        }
    }
}

/// Writes into directory `dir` (created if missing) and returns the files
/// written: `total_tardiness.csv`, `n_tardy.csv`, `total_energy.csv` for
/// tables, `boxplot.csv` otherwise.
pub fn export(
    stats: &[AggregateStats],
    results: &[RunResult],
    dir: impl AsRef<Path>,
    format: ExportFormat,
) -> Result<Vec<PathBuf>, BenchError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    match format {
        ExportFormat::TableCsv => {
            let cols = table_columns(stats);
            let mut jobs: Vec<usize> = stats.iter().map(|s| s.n_jobs).collect();
            jobs.sort_unstable();
            jobs.dedup();
            let mut files = Vec::new();
            for m in Metric::ALL {
                let path = dir.join(format!("{}.csv", m.file_stem()));
                let mut w = csv::Writer::from_path(&path)?;
                let mut header = vec!["Jobs".to_string()];
                header.extend(cols.iter().cloned());
                w.write_record(&header)?;
                for &n in &jobs {
                    let mut row = vec![n.to_string()];
                    for c in &cols {
                        let cell = stats
                            .iter()
                            .find(|s| &s.policy == c && s.n_jobs == n)
                            .map_or(String::new(), |s| s.metric(m).mean.to_string());
                        row.push(cell);
                    }
                    w.write_record(&row)?;
                }
                w.flush()?;
                files.push(path);
            }
            Ok(files)
        }
        ExportFormat::BoxplotCsv => {
            let path = dir.join("boxplot.csv");
            let mut w = csv::Writer::from_path(&path)?;
            for r in results {
                w.serialize(BoxplotRow::from(r))?;
            }
            w.flush()?;
            Ok(vec![path])
        }
    }
}

/// Parsed table: `values[i][j]` is the mean for `jobs[i]` under
/// `policies[j]`, `None` where the cell was empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub policies: Vec<String>,
    pub jobs: Vec<usize>,
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn read_table_csv(path: impl AsRef<Path>) -> Result<Table, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.get(0) != Some("Jobs") {
        return Err(BenchError::Parse("first column must be Jobs".into()));
    }
    let policies: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut jobs = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let n = rec
            .get(0)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| BenchError::Parse("bad job count".into()))?;
        let row = rec
            .iter()
            .skip(1)
            .map(|v| {
                if v.is_empty() {
                    Ok(None)
                } else {
                    v.parse().map(Some).map_err(|_| BenchError::Parse(format!("bad number {v:?}")))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        jobs.push(n);
        values.push(row);
    }
    Ok(Table { policies, jobs, values })
}

pub fn read_boxplot_csv(path: impl AsRef<Path>) -> Result<Vec<BoxplotRow>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<BoxplotRow>, _>>()?)
}
