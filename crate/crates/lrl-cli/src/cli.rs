//! Argument model and top-level dispatch.
//!
//! Exit codes: 0 on success (including "verification ran and reported
//! false"), 1 on usage or config errors, 2 on solver numerical failure
//! (partial outputs are still written).

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "lrl",
    version,
    about = "Low-rank matrix sensing experiments: generate problems, run solvers, verify optimality certificates"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Base seed override for solver randomness (default 0 or the config's
    /// own seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for independent cells.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Output path (per-command default otherwise).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Table output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Relative fixed-point tolerance for ISTA/PPGD.
    #[arg(long = "tol-fixpoint", global = true, default_value_t = 1e-10)]
    pub tol_fixpoint: f64,

    /// Relative gradient tolerance for the factored solver.
    #[arg(long = "tol-grad", global = true, default_value_t = 1e-8)]
    pub tol_grad: f64,

    /// Certificate census tolerance (singular values >= 1 - tol count as
    /// large).
    #[arg(long = "tol-cert", global = true, default_value_t = 1e-6)]
    pub tol_cert: f64,

    /// Relative tolerance for numerical rank counting.
    #[arg(long = "rank-tol", global = true, default_value_t = 1e-6)]
    pub rank_tol: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a problem file from a JSON config.
    Generate(GenerateArgs),
    /// Run a solver on a problem file.
    Solve(SolveArgs),
    /// Verify optimality and rank-bound certificates for a solution.
    Verify(VerifyArgs),
    /// Sweep the factored solver over ranks and seeds against the
    /// reference solution.
    Landscape(LandscapeArgs),
    /// Grid sweep over noise ratio, penalty, and measurement budget.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// JSON config (see GenerateConfig).
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    Ista,
    Ppgd,
    Bm,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Ista => "ista",
            SolverKind::Ppgd => "ppgd",
            SolverKind::Bm => "bm",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StartKind {
    Zero,
    Random,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: PathBuf,

    #[arg(long, value_enum)]
    pub solver: SolverKind,

    /// Rank cap (required for ppgd and bm).
    #[arg(long)]
    pub rank: Option<usize>,

    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,

    /// "auto" or a positive number.
    #[arg(long, default_value = "auto")]
    pub stepsize: String,

    /// Number of seeded runs (random starts / factored initializations).
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,

    #[arg(long, value_enum, default_value_t = StartKind::Zero)]
    pub start: StartKind,

    /// Reference for the trace's distance column: a solve-report path, or
    /// "auto" for the cached reference solution.
    #[arg(long)]
    pub reference: Option<String>,

    /// Emit a convergence-curve SVG next to the report.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub problem: PathBuf,

    /// Solve report whose final matrix is the candidate solution.
    #[arg(long)]
    pub solution: PathBuf,

    #[arg(long, default_value_t = 200)]
    pub rip_samples: usize,

    /// Attach the certificate matrix to the report.
    #[arg(long)]
    pub include_matrices: bool,
}

#[derive(Args, Debug)]
pub struct LandscapeArgs {
    #[arg(long)]
    pub problem: PathBuf,

    /// Comma-separated rank caps, e.g. 2,3,4.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ranks: Vec<usize>,

    /// Random initializations per rank.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,

    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,

    /// Emit a distance-vs-rank scatter SVG next to the table.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// JSON config (see SweepConfig).
    #[arg(long)]
    pub config: PathBuf,

    /// Emit a solution-rank-vs-noise scatter SVG next to the table.
    #[arg(long)]
    pub plot: bool,
}

pub fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Generate(args) => commands::generate::run(&args, &cli.global),
        Command::Solve(args) => commands::solve::run(&args, &cli.global),
        Command::Verify(args) => commands::verify::run(&args, &cli.global),
        Command::Landscape(args) => commands::landscape::run(&args, &cli.global),
        Command::Sweep(args) => commands::sweep::run(&args, &cli.global),
    }
}

/// Parse, dispatch, and map every outcome to an exit code.
pub fn main_impl() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LRL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            EXIT_USAGE
        }
    }
}

/// Build a scoped thread pool honoring `--jobs`.
pub fn thread_pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?)
}
