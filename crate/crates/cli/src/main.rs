//! `plauth`: batch experiments for the forging-attack bound.
//!
//! Every subcommand writes its primary output (CSV, solution file or JSON
//! report) to `--out` or stdout, plus a JSON manifest with the resolved
//! configuration and a summary: `<out>.json` next to the output, or stderr
//! when writing to stdout.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "plauth", version, about = "Optimal Gaussian forging attack on channel-based authentication")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one scenario and write the solution file.
    Solve(SolveArgs),
    /// Sample the (alpha, beta_low) boundary of the error region.
    Region(RegionArgs),
    /// Identity-block scenarios over a grid of n and rho.
    Sweep(SweepArgs),
    /// Monte Carlo over random Wishart scenarios.
    Wishart(WishartArgs),
    /// Random perturbations around a saved solution.
    Perturb(PerturbArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML file with default values; keys are the long flag names with `_`.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Residual threshold required before an iteration counts as converged.
    #[arg(long)]
    pub tol_stat: Option<f64>,
    /// Under-relaxation weight w in (0, 1]; 1 is the plain iteration.
    #[arg(long)]
    pub relaxation: Option<f64>,
    /// Worker threads for independent trials (does not affect the output).
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// A scenario file, or an identity-block scenario given inline.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long, value_name = "FILE", conflicts_with_all = ["n", "rho"])]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Use this divergence instead of solving a scenario.
    #[arg(long, conflicts_with_all = ["scenario", "n", "rho"])]
    pub d_star: Option<f64>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Number of evenly spaced interior alpha points.
    #[arg(long)]
    pub alpha_points: Option<usize>,
    /// Explicit alpha grid (comma separated); overrides --alpha-points.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rho: Option<Vec<f64>>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Fixed tau; defaults to sigma * rho for every row.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct WishartArgs {
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// `real` or `complex` entries.
    #[arg(long)]
    pub field: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// Solution file written by `solve`.
    #[arg(long, value_name = "FILE")]
    pub solution: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Perturbation norm relative to ||Z|| and ||C||.
    #[arg(long)]
    pub scale: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Region(a) => commands::region(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Wishart(a) => commands::wishart(a),
        Command::Perturb(a) => commands::perturb(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
