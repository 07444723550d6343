//! Paired replications over common random numbers, summary statistics and
//! CSV export.

mod export;
mod stats;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristics::HeuristicPolicy;
use crate::madqn::{evaluate, MadqnCheckpoint};
use crate::scenario::{generate_scenario, Scenario, ScenarioConfig};
use crate::sim::{run_policy, RunMetrics, Simulation};

pub use export::{export, read_boxplot_csv, read_table_csv, table_columns, BoxplotRow, ExportFormat, Table};
pub use stats::{quantile_sorted, wilcoxon_signed_rank_less, Summary, WilcoxonResult};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark request: {0}")]
    Invalid(String),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed csv: {0}")]
    Parse(String),
}

/// A scheduler under evaluation.
#[derive(Debug, Clone)]
pub enum PolicySpec {
    Heuristic(HeuristicPolicy),
    Madqn(Arc<MadqnCheckpoint>),
}

impl PolicySpec {
    pub fn name(&self) -> String {
        match self {
            PolicySpec::Heuristic(h) => h.to_string(),
            PolicySpec::Madqn(_) => "MADQN".into(),
        }
    }

    pub fn all_heuristics() -> Vec<PolicySpec> {
        HeuristicPolicy::ALL.iter().copied().map(PolicySpec::Heuristic).collect()
    }

    pub fn run(&self, s: &Scenario) -> Result<RunMetrics, String> {
        match self {
            PolicySpec::Heuristic(h) => {
                let mut p = *h;
                run_policy(&mut Simulation::new(s), &mut p).map_err(|e| e.to_string())
            }
            PolicySpec::Madqn(c) => evaluate(c, s).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Tardiness,
    TardyJobs,
    Energy,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Tardiness, Metric::TardyJobs, Metric::Energy];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Tardiness => "total tardiness",
            Metric::TardyJobs => "tardy jobs",
            Metric::Energy => "energy %",
        }
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            Metric::Tardiness => "total_tardiness",
            Metric::TardyJobs => "n_tardy",
            Metric::Energy => "total_energy",
        }
    }

    pub fn value(self, r: &RunResult) -> f64 {
        match self {
            Metric::Tardiness => r.total_tardiness,
            Metric::TardyJobs => r.n_tardy as f64,
            Metric::Energy => r.total_energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub policy: String,
    pub n_jobs: usize,
    pub replication: usize,
    pub seed: u64,
    pub scenario_hash: String,
    pub total_tardiness: f64,
    pub n_tardy: usize,
    pub total_energy: f64,
    pub makespan: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub policy: String,
    pub n_jobs: usize,
    pub replication: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchOutcome {
    pub results: Vec<RunResult>,
    pub failures: Vec<Failure>,
}

/// Configuration of replication `r`: seed `base.seed + r`, layout pinned to
/// the base layout seed.
pub fn replication_config(base: &ScenarioConfig, r: usize) -> ScenarioConfig {
    let mut c = base.clone();
    c.layout_seed = Some(base.layout_seed.unwrap_or(base.seed));
    c.seed = base.seed.wrapping_add(r as u64) & (i64::MAX as u64);
    c
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, BenchError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        b = b.num_threads(workers);
    }
    b.build().map_err(|e| BenchError::Pool(e.to_string()))
}

/// Replications of a single policy.
pub fn run_replications(
    policy: &PolicySpec,
    base: &ScenarioConfig,
    n_reps: usize,
    workers: usize,
) -> Result<BenchOutcome, BenchError> {
    run_bench(std::slice::from_ref(policy), std::slice::from_ref(base), n_reps, workers)
}

/// Every policy on every replication of every base configuration. Each
/// replication's scenario is generated once and shared by all policies.
/// Results are ordered by base, policy, then replication; failures are
/// recorded and the run continues.
pub fn run_bench(
    policies: &[PolicySpec],
    bases: &[ScenarioConfig],
    n_reps: usize,
    workers: usize,
) -> Result<BenchOutcome, BenchError> {
    if n_reps == 0 {
        return Err(BenchError::Invalid("at least one replication is required".into()));
    }
    if policies.is_empty() || bases.is_empty() {
        return Err(BenchError::Invalid("no policies or no job counts".into()));
    }
    let units: Vec<(usize, usize)> = (0..bases.len()).flat_map(|b| (0..n_reps).map(move |r| (b, r))).collect();
    let per_unit: Vec<Vec<Result<RunResult, Failure>>> = pool(workers)?.install(|| {
        units
            .par_iter()
            .map(|&(b, r)| {
                let cfg = replication_config(&bases[b], r);
                let fail = |p: &PolicySpec, message: String| Failure {
                    policy: p.name(),
                    n_jobs: cfg.n_jobs,
                    replication: r,
                    seed: cfg.seed,
                    message,
                };
                let scenario = match generate_scenario(&cfg) {
                    Ok(s) => s,
                    Err(e) => return policies.iter().map(|p| Err(fail(p, e.to_string()))).collect(),
                };
                let hash = scenario.content_hash();
                policies
                    .iter()
                    .map(|p| {
                        let t0 = Instant::now();
                        let m = p.run(&scenario).map_err(|e| fail(p, e))?;
                        Ok(RunResult {
                            policy: p.name(),
                            n_jobs: cfg.n_jobs,
                            replication: r,
                            seed: cfg.seed,
                            scenario_hash: hash.clone(),
                            total_tardiness: m.total_tardiness,
                            n_tardy: m.n_tardy,
                            total_energy: m.total_energy,
                            makespan: m.makespan,
                            wall_time_s: t0.elapsed().as_secs_f64(),
                        })
                    })
                    .collect()
            })
            .collect()
    });

    let mut out = BenchOutcome::default();
    for b in 0..bases.len() {
        for p in 0..policies.len() {
            for r in 0..n_reps {
                match &per_unit[b * n_reps + r][p] {
                    Ok(res) => out.results.push(res.clone()),
                    Err(f) => out.failures.push(f.clone()),
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub policy: String,
    pub n_jobs: usize,
    pub tardiness: Summary,
    pub n_tardy: Summary,
    pub energy: Summary,
}

impl AggregateStats {
    pub fn metric(&self, m: Metric) -> &Summary {
        match m {
            Metric::Tardiness => &self.tardiness,
            Metric::TardyJobs => &self.n_tardy,
            Metric::Energy => &self.energy,
        }
    }
}

/// One entry per (policy, job count), in order of first appearance.
pub fn summarize(results: &[RunResult]) -> Vec<AggregateStats> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in results {
        let k = (r.policy.clone(), r.n_jobs);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(policy, n_jobs)| {
            let group: Vec<&RunResult> =
                results.iter().filter(|r| r.policy == policy && r.n_jobs == n_jobs).collect();
            let of = |m: Metric| Summary::of(&group.iter().map(|r| m.value(r)).collect::<Vec<_>>());
            AggregateStats {
                tardiness: of(Metric::Tardiness),
                n_tardy: of(Metric::TardyJobs),
                energy: of(Metric::Energy),
                policy,
                n_jobs,
            }
        })
        .collect()
}

/// Paired one-sided test that `a` is lower than `b` on `metric` at `n_jobs`.
/// Pairs are matched by replication and must share a scenario hash.
pub fn compare(
    results: &[RunResult],
    a: &str,
    b: &str,
    n_jobs: usize,
    metric: Metric,
) -> Result<WilcoxonResult, BenchError> {
    let pick = |name: &str| -> Vec<&RunResult> {
        results.iter().filter(|r| r.policy == name && r.n_jobs == n_jobs).collect()
    };
    let (ra, rb) = (pick(a), pick(b));
    let mut x = Vec::new();
    let mut y = Vec::new();
    for p in &ra {
        if let Some(q) = rb.iter().find(|q| q.replication == p.replication) {
            if p.scenario_hash != q.scenario_hash {
                return Err(BenchError::Invalid(format!(
                    "replication {} of {a} and {b} ran on different scenarios",
                    p.replication
                )));
            }
            x.push(metric.value(p));
            y.push(metric.value(q));
        }
    }
    if x.is_empty() {
        return Err(BenchError::Invalid(format!("no paired results for {a} and {b} at {n_jobs} jobs")));
    }
    Ok(wilcoxon_signed_rank_less(&x, &y))
}
