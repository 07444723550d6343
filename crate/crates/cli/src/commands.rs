use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use aivsched::bench::{self, ExportFormat, Metric, PolicySpec};
use aivsched::heuristics::HeuristicPolicy;
use aivsched::madqn::{self, MadqnCheckpoint, MadqnError, TrainConfig};
use aivsched::scenario::{self, ScenarioConfig};
use aivsched::sim::{run_policy, write_trace, Simulation};
use anyhow::Context;
use serde_json::json;

use crate::{BenchArgs, Cli, Command, GenerateArgs, RunArgs, ScenarioArgs, TrainArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
    Divergence(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
            CliError::Divergence(m) => write!(f, "{m}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn runtime<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Runtime(e.into())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Run(a) => run(cli, a),
        Command::Train(a) => train(cli, a),
        Command::Bench(a) => bench(cli, a),
    }
}

fn banner(cli: &Cli, value: &serde_json::Value) {
    if !cli.quiet {
        eprintln!("# effective configuration: {value}");
    }
}

fn scenario_config(n_jobs: usize, a: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig::case_study(n_jobs)
        .with_seed(a.seed)
        .with_products(a.products)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    c.layout_seed = a.layout_seed;
    c.breakdown.enabled = !a.no_breakdowns;
    c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(c)
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<()> {
    let config = scenario_config(a.jobs, &a.scenario)?;
    banner(cli, &json!({ "command": "generate", "output": a.output, "scenario": config }));
    let s = scenario::generate_scenario(&config).map_err(runtime)?;
    scenario::save_scenario(&s, &a.output).map_err(runtime)?;
    println!("wrote {} ({} jobs, sha256 {})", a.output.display(), s.n_jobs(), s.content_hash());
    Ok(())
}

enum RunPolicy {
    Heuristic(HeuristicPolicy),
    Madqn(Box<MadqnCheckpoint>),
}

fn resolve_policy(name: &str, checkpoint: Option<&Path>) -> Result<RunPolicy> {
    if name.eq_ignore_ascii_case("MADQN") {
        let path = checkpoint.ok_or_else(|| CliError::Usage("policy MADQN requires --checkpoint".into()))?;
        let c = MadqnCheckpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
        return Ok(RunPolicy::Madqn(Box::new(c)));
    }
    name.parse::<HeuristicPolicy>()
        .map(RunPolicy::Heuristic)
        .map_err(|e| CliError::Usage(format!("{e} (or MADQN with --checkpoint)")))
}

fn run(cli: &Cli, a: &RunArgs) -> Result<()> {
    let policy = resolve_policy(&a.policy, a.checkpoint.as_deref())?;
    let s = scenario::load_scenario(&a.scenario).map_err(runtime)?;
    banner(
        cli,
        &json!({
            "command": "run",
            "scenario": a.scenario,
            "scenario_sha256": s.content_hash(),
            "policy": a.policy,
            "checkpoint": a.checkpoint,
            "trace": a.trace,
            "format": a.format,
        }),
    );
    let mut sim = Simulation::new(&s);
    if a.trace.is_some() {
        sim = sim.with_trace();
    }
    let (name, metrics) = match policy {
        RunPolicy::Heuristic(mut h) => {
            let m = run_policy(&mut sim, &mut h).map_err(runtime)?;
            (h.to_string(), m)
        }
        RunPolicy::Madqn(c) => ("MADQN".to_string(), madqn::evaluate_in(&c, &mut sim).map_err(runtime)?),
    };
    if let (Some(path), Some(records)) = (&a.trace, sim.trace()) {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = std::io::BufWriter::new(file);
        write_trace(&mut w, records).map_err(runtime)?;
        w.flush().map_err(runtime)?;
    }
    if a.format == "json" {
        let v = json!({ "policy": name, "jobs": s.n_jobs(), "seed": s.seed, "metrics": metrics });
        println!("{v}");
    } else {
        println!(
            "policy={name} jobs={} seed={} total_tardiness={} n_tardy={} total_energy={} makespan={} recharges={}",
            s.n_jobs(),
            s.seed,
            metrics.total_tardiness,
            metrics.n_tardy,
            metrics.total_energy,
            metrics.makespan,
            metrics.recharges,
        );
    }
    Ok(())
}

fn default_log_path(output: &Path) -> PathBuf {
    output.with_extension("log.csv")
}

fn train(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let base = scenario_config(a.jobs, &a.scenario)?;
    let init = match &a.resume {
        Some(path) => {
            if a.config.is_some() || a.train_seed.is_some() {
                return Err(CliError::Usage("--config and --train-seed cannot be combined with --resume".into()));
            }
            MadqnCheckpoint::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => {
            let mut config = match &a.config {
                Some(path) => {
                    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    toml::from_str::<TrainConfig>(&text)
                        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
                }
                None => TrainConfig::default(),
            };
            if let Some(s) = a.train_seed {
                config.seed = s;
            }
            config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let reference = madqn::training_scenarios(&base, 1).map_err(runtime)?;
            MadqnCheckpoint::init(config, &reference[0]).map_err(runtime)?
        }
    };
    let episodes = a.episodes.unwrap_or(init.config.episodes);
    let done = init.episodes_done;
    let log_path = a.log.clone().unwrap_or_else(|| default_log_path(&a.output));
    banner(
        cli,
        &json!({
            "command": "train",
            "scenario": base,
            "train": init.config,
            "episodes_done": done,
            "episodes": episodes,
            "resume": a.resume,
            "output": a.output,
            "log": log_path,
        }),
    );

    let count = init.config.episodes.max(done + episodes).max(1);
    let scenarios = madqn::training_scenarios(&base, count).map_err(runtime)?;
    let validation = if init.config.validation_interval > 0 {
        madqn::validation_scenarios(&base, init.config.validation_scenarios).map_err(runtime)?
    } else {
        Vec::new()
    };
    let verbose = cli.verbose > 0;
    let result = madqn::train(&scenarios, &validation, init, episodes, |row| {
        if verbose {
            eprintln!(
                "episode {} eps={:.3} loss_ws={:.5} loss_aiv={:.5} tardiness={:.1} tardy={} energy={:.2}",
                row.episode, row.epsilon, row.mean_loss_ws, row.mean_loss_aiv, row.total_tardiness, row.n_tardy, row.energy_pct
            );
        }
    });
    let outcome = match result {
        Ok(o) => o,
        Err(MadqnError::Divergence { episode, reason, last_finite }) => {
            last_finite.save(&a.output).map_err(runtime)?;
            return Err(CliError::Divergence(format!(
                "training diverged in episode {episode}: {reason}; last finite state saved to {}",
                a.output.display()
            )));
        }
        Err(e) => return Err(runtime(e)),
    };
    outcome.checkpoint.save(&a.output).map_err(runtime)?;
    madqn::write_log_csv(&outcome.log, &log_path).with_context(|| format!("writing {}", log_path.display()))?;
    if !cli.quiet {
        for v in &outcome.validations {
            eprintln!(
                "validation after {} episodes: mean tardiness {:.1}{}",
                v.episode,
                v.mean_tardiness,
                if v.selected { " (selected)" } else { "" }
            );
        }
    }
    let c = &outcome.checkpoint;
    let selected = c.selected.as_ref().map_or("none".to_string(), |s| s.episode.to_string());
    println!(
        "episodes_done={} updates_ws={} updates_aiv={} selected_episode={selected} decisions={} infeasible={}",
        c.episodes_done, c.updates[0], c.updates[1], outcome.decisions, outcome.infeasible
    );
    println!("wrote {} and {}", a.output.display(), log_path.display());
    Ok(())
}

fn bench(cli: &Cli, a: &BenchArgs) -> Result<()> {
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if a.jobs.is_empty() {
        return Err(CliError::Usage("--jobs needs at least one job count".into()));
    }
    let mut policies = PolicySpec::all_heuristics();
    match (&a.checkpoint, a.heuristics_only) {
        (Some(path), _) => {
            let c = MadqnCheckpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
            policies.push(PolicySpec::Madqn(Arc::new(c)));
        }
        (None, true) => {}
        (None, false) => {
            return Err(CliError::Usage("bench needs --checkpoint for the MADQN column, or --heuristics-only".into()))
        }
    }
    let bases = a.jobs.iter().map(|&n| scenario_config(n, &a.scenario)).collect::<Result<Vec<_>>>()?;
    let formats = match a.format.as_deref() {
        Some(f) => vec![f.parse::<ExportFormat>().map_err(|e| CliError::Usage(e.to_string()))?],
        None => vec![ExportFormat::TableCsv, ExportFormat::BoxplotCsv],
    };
    let effective = json!({
        "command": "bench",
        "jobs": a.jobs,
        "reps": a.reps,
        "policies": policies.iter().map(PolicySpec::name).collect::<Vec<_>>(),
        "checkpoint": a.checkpoint,
        "workers": a.workers,
        "format": a.format,
        "out": a.out,
        "scenarios": bases,
    });
    banner(cli, &effective);

    let outcome = bench::run_bench(&policies, &bases, a.reps, a.workers).map_err(runtime)?;
    for f in &outcome.failures {
        eprintln!("failed: {} jobs={} replication={} seed={}: {}", f.policy, f.n_jobs, f.replication, f.seed, f.message);
    }
    if outcome.results.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!("every replication failed")));
    }
    let stats = bench::summarize(&outcome.results);
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let config_path = a.out.join("config.json");
    fs::write(&config_path, serde_json::to_string_pretty(&effective).map_err(runtime)?)
        .with_context(|| format!("writing {}", config_path.display()))?;
    let mut written = vec![config_path];
    for f in formats {
        written.extend(bench::export(&stats, &outcome.results, &a.out, f).map_err(runtime)?);
    }

    println!("{:>5} {:<12} {:>12} {:>12} {:>12} {:>10} {:>10}", "jobs", "policy", "T_mean", "T_median", "T_std", "nT_mean", "E_mean");
    for s in &stats {
        println!(
            "{:>5} {:<12} {:>12.2} {:>12.2} {:>12.2} {:>10.3} {:>10.3}",
            s.n_jobs, s.policy, s.tardiness.mean, s.tardiness.median, s.tardiness.std, s.n_tardy.mean, s.energy.mean
        );
    }
    if policies.iter().any(|p| matches!(p, PolicySpec::Madqn(_))) {
        println!("one-sided paired Wilcoxon p-values, MADQN lower than each heuristic:");
        for &n in &a.jobs {
            for h in HeuristicPolicy::names() {
                let p: Vec<String> = Metric::ALL
                    .iter()
                    .map(|&m| {
                        bench::compare(&outcome.results, "MADQN", &h, n, m)
                            .map_or("n/a".to_string(), |w| format!("{:.3e}", w.p_value))
                    })
                    .collect();
                println!("{:>5} {:<12} tardiness={} tardy={} energy={}", n, h, p[0], p[1], p[2]);
            }
        }
    }
    println!("failures={}", outcome.failures.len());
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
