//! `abf` — budget-constrained agent memory workbench.
//!
//! Subcommands: `gen` writes a synthetic JSONL workload; `run` replays one
//! trace under one retention policy; `compare` sweeps policies across seeded
//! workloads into a CSV; `score` prints the importance breakdown for a
//! unit/query pair; `snapshot` creates and inspects store snapshots.
//!
//! Exit codes are stable for scripting: 0 success, 1 I/O or data error,
//! 2 usage error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters: exit 2.
    Usage(String),
    /// Bad files or data: exit 1.
    Data(String),
}

#[derive(Parser)]
#[command(
    name = "abf",
    version,
    about = "Budget-constrained agent memory workbench"
)]
struct Cli {
    /// TOML config file; flags always win. Defaults to $ABF_DEFAULT_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic workload trace (JSONL).
    Gen(GenArgs),
    /// Replay a trace under one retention policy and emit a metrics report.
    Run(RunArgs),
    /// Replay seeded workloads under several policies; emit CSV rows.
    Compare(CompareArgs),
    /// Print the importance breakdown for a synthetic unit/query pair.
    Score(ScoreArgs),
    /// Create or inspect memory store snapshots.
    Snapshot(SnapshotArgs),
}

/// Scoring weight flags shared by every command that scores units.
#[derive(Args, Clone, Copy, Default)]
pub struct ScoringFlags {
    /// Recency weight (normalized with beta and gamma).
    #[arg(long)]
    alpha: Option<f64>,
    /// Frequency weight.
    #[arg(long)]
    beta: Option<f64>,
    /// Similarity weight.
    #[arg(long)]
    gamma: Option<f64>,
    /// Decay rate per step.
    #[arg(long)]
    lambda: Option<f64>,
    /// Tradeoff coefficient for the memory-footprint penalty.
    #[arg(long)]
    eta: Option<f64>,
}

/// Workload generator flags shared by `gen` and `compare`.
#[derive(Args, Clone, Copy, Default)]
pub struct WorkloadFlags {
    /// Total number of events.
    #[arg(long)]
    steps: Option<u64>,
    /// Number of distinct fact keys.
    #[arg(long)]
    keys: Option<u64>,
    /// Probability an event rebinds an existing key.
    #[arg(long)]
    update_rate: Option<f64>,
    /// Probability an event queries a known key.
    #[arg(long)]
    query_rate: Option<f64>,
    /// Probability an event observes a never-queried distractor fact.
    #[arg(long)]
    distractor_rate: Option<f64>,
    /// Number of equal trace segments for the retention curve.
    #[arg(long)]
    stages: Option<u64>,
    /// Workload seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Size of the value word pool.
    #[arg(long)]
    vocab: Option<u64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    workload: WorkloadFlags,
    /// Output trace path (JSONL).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Trace file produced by `gen`.
    #[arg(long)]
    trace: PathBuf,
    /// Retention policy: abf, fifo, lru, lfu, random, none, recency_only.
    #[arg(long)]
    policy: Option<String>,
    #[command(flatten)]
    scoring: ScoringFlags,
    /// Cardinality budget B.
    #[arg(long)]
    budget: Option<usize>,
    /// Retrieval depth k.
    #[arg(long)]
    k: Option<usize>,
    /// Seed for the random policy.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the metrics report as JSON here (otherwise stdout).
    #[arg(long)]
    json_out: Option<PathBuf>,
    /// Write the metrics report as a CSV row here.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Write a snapshot of the final store state here.
    #[arg(long)]
    dump_store: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated policy names.
    #[arg(long)]
    policies: Option<String>,
    /// Workload seeds: a single value, "a..b" (inclusive), or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    #[command(flatten)]
    workload: WorkloadFlags,
    #[command(flatten)]
    scoring: ScoringFlags,
    /// Cardinality budget B.
    #[arg(long)]
    budget: Option<usize>,
    /// Retrieval depth k.
    #[arg(long)]
    k: Option<usize>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Unit content text.
    #[arg(long)]
    content: String,
    /// Active query text; similarity is 0 without it.
    #[arg(long)]
    query: Option<String>,
    /// Step at which the unit was inserted.
    #[arg(long, default_value_t = 0)]
    inserted_at: u64,
    /// Step at which to score.
    #[arg(long, default_value_t = 0)]
    t: u64,
    /// Recorded access count.
    #[arg(long, default_value_t = 0)]
    access_count: u64,
    /// Embedding dimension.
    #[arg(long)]
    dimension: Option<usize>,
    #[command(flatten)]
    scoring: ScoringFlags,
}

#[derive(Args)]
struct SnapshotArgs {
    #[command(subcommand)]
    action: SnapshotAction,
}

#[derive(Subcommand)]
enum SnapshotAction {
    /// Write a snapshot of a fresh, empty store.
    Init {
        /// Output path.
        #[arg(long)]
        out: PathBuf,
        /// Embedding dimension.
        #[arg(long)]
        dimension: Option<usize>,
        /// Cardinality budget B.
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        scoring: ScoringFlags,
    },
    /// Load a snapshot and print a summary.
    Show {
        /// Snapshot path.
        #[arg(long)]
        path: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file_config = match manifest::load_file_config(cli.config.as_deref()) {
        Ok(config) => config,
        Err(e) => return report(e),
    };
    let result = match cli.command {
        Command::Gen(args) => commands::gen(&args.workload, &args.out, &file_config),
        Command::Run(args) => commands::run(&args, &file_config),
        Command::Compare(args) => commands::compare(&args, &file_config),
        Command::Score(args) => commands::score(&args, &file_config),
        Command::Snapshot(args) => match args.action {
            SnapshotAction::Init {
                out,
                dimension,
                budget,
                scoring,
            } => commands::snapshot_init(&out, dimension, budget, &scoring, &file_config),
            SnapshotAction::Show { path } => commands::snapshot_show(&path),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    match e {
        CliError::Usage(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        CliError::Data(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
