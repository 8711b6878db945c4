//! `quorate`: validate, solve, simulate, certify and compare multi-sensor
//! detection scenarios.
//!
//! Exit codes: 0 success, 1 semantic failure, 2 unreadable or malformed
//! input.

mod commands;
mod failure;
mod scenario;
mod solution;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scenario::Backend;

pub const TOOL: &str = "quorate";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "quorate", version, about = "Multi-sensor disorder detection as a stopping game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario's schema and game axioms.
    Validate,
    /// Compute the equilibrium and write solution.json.
    Solve,
    /// Run a solution on sampled trajectories; writes report.json and trajectories.csv.
    Simulate,
    /// Search for profitable unilateral deviations; writes certificate.json.
    Certify {
        /// Random and greedy deviations instead of exhaustive search.
        #[arg(long, conflicts_with = "best_response")]
        sampled: bool,
        /// Compare against the exact best-response value instead of enumerating deviations.
        #[arg(long)]
        best_response: bool,
    },
    /// Simulate the equilibrium against fixed-time and never-stop baselines.
    Compare,
}

#[derive(Debug, Args)]
pub struct Options {
    /// Scenario file (TOML or JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Solution file to read; defaults to OUT/solution.json.
    #[arg(long, global = true, value_name = "PATH")]
    pub solution: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Simulation seed, overriding the scenario.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Number of simulated trajectories, overriding the scenario.
    #[arg(long, global = true, value_name = "N")]
    pub samples: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub backend: Option<Backend>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    pub quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = &cli.options;
    let result = match cli.command {
        Command::Validate => commands::validate(opts),
        Command::Solve => commands::solve_cmd(opts),
        Command::Simulate => commands::simulate(opts),
        Command::Certify { sampled, best_response } => {
            let mode = if sampled {
                commands::CertifyMode::Sampled
            } else if best_response {
                commands::CertifyMode::BestResponse
            } else {
                commands::CertifyMode::Exhaustive
            };
            commands::certify(opts, mode)
        }
        Command::Compare => commands::compare(opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let err = serde_json::json!({ "error": f.message, "exit_code": f.code });
            eprintln!("{err}");
            ExitCode::from(f.code)
        }
    }
}
