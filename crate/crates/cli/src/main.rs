mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

/// Scheduling simulator for a flexible job shop served by battery-powered
/// autonomous vehicles.
#[derive(Debug, Parser)]
#[command(name = "aivsched", version)]
pub struct Cli {
    /// Suppress the effective-configuration banner on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    /// Repeat for more progress output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a scenario file.
    Generate(GenerateArgs),
    /// Run one policy on one scenario and print its metrics.
    Run(RunArgs),
    /// Train the multi-agent DQN scheduler.
    Train(TrainArgs),
    /// Compare policies over paired replications and export CSV tables.
    Bench(BenchArgs),
}

/// Parameters shared by every command that generates scenarios.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Base seed.
    #[arg(long, env = "AIVSCHED_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Seed of the layout stream; defaults to the base seed.
    #[arg(long)]
    pub layout_seed: Option<u64>,
    /// Number of product types, taken in order from the case-study routings.
    #[arg(long, default_value_t = 4)]
    pub products: usize,
    /// Disable workstation unavailability.
    #[arg(long)]
    pub no_breakdowns: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 20)]
    pub jobs: usize,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Output scenario file (TOML).
    #[arg(short, long)]
    pub output: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file written by `generate`.
    #[arg(long)]
    pub scenario: std::path::PathBuf,
    /// A heuristic name such as STT.SPT, or MADQN.
    #[arg(long)]
    pub policy: String,
    /// Trained checkpoint, required for MADQN.
    #[arg(long)]
    pub checkpoint: Option<std::path::PathBuf>,
    /// Write the event trace (tab-separated) to this file.
    #[arg(long)]
    pub trace: Option<std::path::PathBuf>,
    /// Output format of the metrics line.
    #[arg(long, default_value = "text", value_parser = ["text", "json"])]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Jobs per training instance.
    #[arg(long, default_value_t = 20)]
    pub jobs: usize,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Episodes to run in this invocation; defaults to the configured budget.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// TOML file with training-configuration overrides.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Seed for weight initialisation and exploration.
    #[arg(long)]
    pub train_seed: Option<u64>,
    /// Continue from this checkpoint instead of fresh weights.
    #[arg(long)]
    pub resume: Option<std::path::PathBuf>,
    /// Output checkpoint (JSON).
    #[arg(short, long)]
    pub output: std::path::PathBuf,
    /// Training log (CSV); defaults to the checkpoint path with `.log.csv`.
    #[arg(long)]
    pub log: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated job counts.
    #[arg(long, value_delimiter = ',', default_value = "20,40,60,80,100")]
    pub jobs: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Trained checkpoint for the MADQN column.
    #[arg(long, conflicts_with = "heuristics_only")]
    pub checkpoint: Option<std::path::PathBuf>,
    /// Compare the nine heuristics only.
    #[arg(long)]
    pub heuristics_only: bool,
    /// Worker threads; 0 uses the available parallelism.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Export format; both are written when omitted.
    #[arg(long, value_parser = ["table-csv", "boxplot-csv"])]
    pub format: Option<String>,
    /// Output directory.
    #[arg(short, long)]
    pub out: std::path::PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 1,
                CliError::Runtime(_) => 2,
                CliError::Divergence(_) => 3,
            })
        }
    }
}
