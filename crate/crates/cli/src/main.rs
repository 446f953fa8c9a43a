//! `costwise`: validate and reduce cost graphs, generate cohorts, fit and
//! sweep cost-aware models, and report their costs.

mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "costwise",
    version,
    about = "Cost-aware sparse logistic models over layered cost graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a graph file and report every structural problem.
    Validate { graph: PathBuf },
    /// Reduce a graph to its features, ways and per-channel usage.
    Reduce {
        graph: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Drop tests whose wait exceeds this many minutes first.
        #[arg(long)]
        wait_cap: Option<f64>,
        #[arg(long, default_value_t = costwise::dnf::DEFAULT_MAX_MINTERMS)]
        max_minterms: usize,
        /// Also write the penalty groups of every SUM channel (λ = 1).
        #[arg(long)]
        groups: Option<PathBuf>,
    },
    /// Generate a synthetic cohort over the graph's features.
    GenData {
        graph: PathBuf,
        #[arg(long, default_value_t = 300)]
        pos: usize,
        #[arg(long, default_value_t = 1700)]
        neg: usize,
        /// Windows before onset labeled positive.
        #[arg(long, default_value_t = 12)]
        horizon: usize,
        #[arg(long, env = "COSTWISE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit one model on a training split and evaluate it on the rest.
    Fit(FitArgs),
    /// Fit and evaluate every (wait cap, method, λ) combination.
    Sweep(SweepArgs),
    /// Keep the sweep rows on the cost/accuracy frontier.
    Frontier {
        sweep: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Comma-separated `column:min` or `column:max`.
        #[arg(long, default_value = "cost_financial:min,cost_caregiver_time:min,auc:max")]
        objectives: String,
        /// Comma-separated columns; the frontier is computed within each group.
        #[arg(long, value_delimiter = ',')]
        group_by: Vec<String>,
    },
    /// Recompute a fitted model's deployment costs from the graph.
    CostReport { model: PathBuf, graph: PathBuf },
}

#[derive(Args, Debug)]
struct CommonFit {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, env = "COSTWISE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.75)]
    train_frac: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = costwise::evaluation::DEFAULT_BOOTSTRAP)]
    bootstrap: usize,
    #[arg(long, default_value_t = costwise::evaluation::DEFAULT_SPECIFICITY)]
    specificity: f64,
    #[arg(long, default_value_t = costwise::dnf::DEFAULT_MAX_MINTERMS)]
    max_minterms: usize,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    common: CommonFit,
    #[arg(long, default_value_t = 0.0)]
    lambda_fin: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda_time: f64,
    /// Without a cap every test is allowed.
    #[arg(long)]
    wait_cap: Option<f64>,
    #[arg(long, default_value = "group")]
    method: costwise::solver::Method,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonFit,
    #[arg(long, default_value_t = 1e-7)]
    grid_min: f64,
    #[arg(long, default_value_t = 1e-3)]
    grid_max: f64,
    #[arg(long, default_value_t = 9)]
    grid_points: usize,
    /// Fix λ_time instead of pairing every grid value with every other.
    #[arg(long)]
    lambda_time: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,10,50")]
    wait_caps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "group,l1,scaled-l1")]
    methods: Vec<costwise::solver::Method>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.kind.code())
        }
    }
}
