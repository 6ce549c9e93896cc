//! `gridtally` — estimate object counts over a gridded region from a handful
//! of sampled tiles.
//!
//! Subcommands cover the full workflow: `generate` builds a synthetic world
//! with known ground truth, `fit` trains a monotone covariate-to-count model,
//! `estimate` produces a single count estimate with diagnostic bounds,
//! `compare` sweeps methods and budgets over repeated runs, and `cost`
//! reports the survey economics of sampling versus exhaustive coverage.

mod commands;
mod config;
mod engine;
mod failure;

use clap::{Parser, Subcommand};

use crate::failure::CliError;

#[derive(Parser)]
#[command(name = "gridtally", version, about = "Sampled object counting over gridded regions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world directory with known ground truth
    Generate(commands::generate::GenerateArgs),
    /// Fit a monotone covariate-to-count model from labeled samples
    Fit(commands::fit::FitArgs),
    /// Estimate the total count of a world from sampled tiles
    Estimate(commands::estimate::EstimateArgs),
    /// Compare estimation methods across budgets over repeated runs
    Compare(commands::compare::CompareArgs),
    /// Report survey cost and the savings from partial sampling
    Cost(commands::cost::CostArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => commands::generate::run(args),
        Command::Fit(args) => commands::fit::run(args),
        Command::Estimate(args) => commands::estimate::run(args),
        Command::Compare(args) => commands::compare::run(args),
        Command::Cost(args) => commands::cost::run(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
