//! `gridtally estimate` — one count estimate with diagnostic bounds.
//!
//! The report is deterministic for a given invocation: no timestamps, no
//! environment echoes, and field order fixed by the struct declarations.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use gridtally::{
    concentration_bound, concentration_sample_size, kl_divergence, markov_bound, percent_error,
    tail_probability, variance_lower_bound, Proposal, SyntheticWorld,
};

use crate::config::{pick, FileConfig};
use crate::engine::{run_one, Method, RunSpec, TransformKind};
use crate::failure::CliError;

#[derive(Args)]
pub struct EstimateArgs {
    /// World directory to estimate
    #[arg(long)]
    world: PathBuf,

    /// JSON config supplying defaults for any omitted flag
    #[arg(long)]
    config: Option<PathBuf>,

    /// Estimation method
    #[arg(long, value_enum)]
    method: Option<Method>,

    /// Total tile budget for the run
    #[arg(long)]
    budget: Option<usize>,

    /// Fraction of the budget spent on training draws
    #[arg(long)]
    train_fraction: Option<f64>,

    /// Fraction of training tiles targeted at positive counts
    #[arg(long)]
    positive_fraction: Option<f64>,

    /// Hard cap on the training set size
    #[arg(long)]
    cap: Option<usize>,

    /// Mixture weight toward uniform in the proposal
    #[arg(long)]
    epsilon: Option<f64>,

    /// Covariate transform for the fitted methods
    #[arg(long, value_enum)]
    transform: Option<TransformKind>,

    /// Overshoot factor for the tail-probability bound
    #[arg(long)]
    markov_k: Option<f64>,

    /// Run seed
    #[arg(long)]
    seed: Option<u64>,

    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BudgetReport {
    total: usize,
    train_fraction: f64,
    deduct_training: bool,
    train_n: usize,
    sampling_n: usize,
}

#[derive(Serialize)]
struct BoundsReport {
    /// Divergence of the drawing proposal from the count-proportional one.
    kl: f64,
    /// Slack so that the nominal sample size covers the actual one.
    t: f64,
    /// Mass of cells whose density ratio exceeds the slack threshold.
    tail: f64,
    /// Expected absolute error bound at the nominal sample size.
    concentration: f64,
    /// Nominal sample size the concentration bound is stated at.
    concentration_n: u64,
    markov_k: f64,
    /// Probability bound on overshooting truth by the factor `markov_k`.
    markov: f64,
    /// Single-draw variance floor implied by the divergence.
    variance_floor: f64,
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    schema: &'a str,
    command: &'a str,
    world: String,
    method: &'a str,
    transform: Option<&'a str>,
    truth: u64,
    estimate: f64,
    stderr: f64,
    percent_error: Option<f64>,
    n: usize,
    l: f64,
    seed: u64,
    epsilon: f64,
    budget: BudgetReport,
    bounds: Option<BoundsReport>,
}

fn bounds_for(
    world: &SyntheticWorld,
    proposal: &Proposal,
    sampling_n: usize,
    markov_k: f64,
) -> Result<BoundsReport, CliError> {
    let truth = world.total_count() as f64;
    let optimal = world.optimal_proposal(0.0)?;
    let kl = kl_divergence(&optimal, proposal)?;
    let t = (((sampling_n as f64).ln()) - kl).max(0.0);
    let tail = tail_probability(&optimal, proposal, kl + t / 2.0)?;
    Ok(BoundsReport {
        kl,
        t,
        tail,
        concentration: concentration_bound(truth, kl, t, tail)?,
        concentration_n: concentration_sample_size(kl, t)?,
        markov_k,
        markov: markov_bound(markov_k)?,
        variance_floor: variance_lower_bound(truth, kl)?,
    })
}

pub fn run(args: EstimateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let spec = RunSpec {
        method: pick(args.method, file.method, Method::Identity),
        budget: pick(args.budget, file.budget, 1000),
        train_fraction: pick(args.train_fraction, file.train_fraction, 0.2),
        positive_fraction: pick(args.positive_fraction, file.positive_fraction, 0.5),
        cap: pick(args.cap, file.cap, 5000),
        epsilon: pick(args.epsilon, file.epsilon, 1e-3),
        transform: pick(args.transform, file.transform, TransformKind::Isotonic),
        seed: pick(args.seed, file.seed, 0),
    };
    let markov_k = pick(args.markov_k, file.markov_k, 2.0);

    let world = gridtally::load_world(&args.world)?;
    let outcome = run_one(&world, &spec)?;
    let truth = world.total_count();

    let (pct, bounds) = if truth > 0 {
        let pct = percent_error(outcome.estimate.estimate, truth as f64)?;
        let bounds = bounds_for(&world, &outcome.proposal, outcome.sampling_n, markov_k)?;
        (Some(pct), Some(bounds))
    } else {
        (None, None)
    };

    let trains = outcome.train_n > 0;
    let report = EstimateReport {
        schema: "1",
        command: "estimate",
        world: args.world.display().to_string(),
        method: spec.method.label(),
        transform: match spec.method {
            Method::Isotonic | Method::IsotonicStar => Some(spec.transform.label()),
            _ => None,
        },
        truth,
        estimate: outcome.estimate.estimate,
        stderr: outcome.estimate.standard_error,
        percent_error: pct,
        n: outcome.sampling_n,
        l: outcome.estimate.tile_size,
        seed: spec.seed,
        epsilon: spec.epsilon,
        budget: BudgetReport {
            total: spec.budget,
            train_fraction: if trains { spec.train_fraction } else { 0.0 },
            deduct_training: spec.method == Method::Isotonic && trains,
            train_n: outcome.train_n,
            sampling_n: outcome.sampling_n,
        },
        bounds,
    };

    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::input(format!("cannot encode report: {e}")))?;
    text.push('\n');
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            eprintln!("report written to {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
