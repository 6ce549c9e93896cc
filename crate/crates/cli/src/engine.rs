//! Shared estimation engine behind `estimate` and `compare`.
//!
//! A single run resolves to: optionally train a proposal on labeled tiles,
//! draw the sampling batch, and reduce it to a count estimate. Training and
//! sampling consume independent substreams of the run seed, so changing the
//! training budget never perturbs the sampling draws.

use clap::ValueEnum;
use serde::Deserialize;

use gridtally::{
    build_training_set, draw, draw_uniform, fit_isotonic, identity_proposal, is_estimate,
    split_budget, substream_seed, tuned_proposal, uniform_estimate, uniform_proposal, AliasTable,
    Budget, CountEstimate, Proposal, SyntheticWorld, Transform, TrainingSpec,
};

use crate::failure::CliError;

const TRAIN_STREAM: u64 = 0;
const SAMPLE_STREAM: u64 = 1;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Uniform tile draws scaled by region area.
    Uniform,
    /// Proposal proportional to the raw covariate.
    Identity,
    /// Proposal from a fitted monotone model; training drawn from the budget.
    Isotonic,
    /// Fitted monotone proposal with training budgeted separately.
    #[value(alias = "isotonic_star")]
    IsotonicStar,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::Identity => "identity",
            Method::Isotonic => "isotonic",
            Method::IsotonicStar => "isotonic-star",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    /// Fitted monotone step function (requires training).
    Isotonic,
    /// Exponential of the covariate; no training needed.
    Exp,
    /// log(1 + covariate); no training needed.
    Log1p,
}

impl TransformKind {
    pub fn label(self) -> &'static str {
        match self {
            TransformKind::Isotonic => "isotonic",
            TransformKind::Exp => "exp",
            TransformKind::Log1p => "log1p",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub method: Method,
    pub budget: usize,
    pub train_fraction: f64,
    pub positive_fraction: f64,
    pub cap: usize,
    pub epsilon: f64,
    pub transform: TransformKind,
    pub seed: u64,
}

pub struct RunOutcome {
    pub estimate: CountEstimate,
    /// Proposal the batch was drawn from; uniform runs record the flat one.
    pub proposal: Proposal,
    pub train_n: usize,
    pub sampling_n: usize,
}

/// Split the budget for the given method. Only `isotonic` both trains and
/// deducts; `isotonic-star` trains off-budget, and the parameter-free
/// transforms skip training entirely.
fn budget_for(spec: &RunSpec) -> Result<(usize, usize), CliError> {
    let trains = matches!(spec.method, Method::Isotonic | Method::IsotonicStar)
        && spec.transform == TransformKind::Isotonic;
    if !trains {
        return Ok((0, spec.budget));
    }
    let budget = Budget {
        total: spec.budget,
        train_fraction: spec.train_fraction,
        deduct_training: spec.method == Method::Isotonic,
    };
    let (train_n, sampling_n) = split_budget(&budget)?;
    Ok((train_n, sampling_n))
}

fn fitted_proposal(
    world: &SyntheticWorld,
    spec: &RunSpec,
    train_n: usize,
) -> Result<Proposal, CliError> {
    let raster = world.raster();
    let mask = world.mask();
    let tile_size = world.tiles().tile_size();
    match spec.transform {
        TransformKind::Isotonic => {
            let base = identity_proposal(raster, mask, spec.epsilon)?;
            let flat = uniform_proposal(raster, mask, 0.0)?;
            let training = TrainingSpec {
                n_train: train_n,
                positive_fraction: spec.positive_fraction,
                cap: spec.cap,
            };
            let samples = build_training_set(
                world,
                raster,
                &base,
                &flat,
                &training,
                substream_seed(spec.seed, TRAIN_STREAM),
            )?;
            let model = fit_isotonic(&samples, tile_size)?;
            Ok(tuned_proposal(raster, mask, Transform::Isotonic(&model), spec.epsilon)?)
        }
        TransformKind::Exp => Ok(tuned_proposal(raster, mask, Transform::Exp, spec.epsilon)?),
        TransformKind::Log1p => Ok(tuned_proposal(raster, mask, Transform::Log1p, spec.epsilon)?),
    }
}

pub fn run_one(world: &SyntheticWorld, spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let raster = world.raster();
    let mask = world.mask();
    let tile_size = world.tiles().tile_size();
    let (train_n, sampling_n) = budget_for(spec)?;
    let sample_seed = substream_seed(spec.seed, SAMPLE_STREAM);

    let (estimate, proposal) = match spec.method {
        Method::Uniform => {
            let batch = draw_uniform(mask, sampling_n, sample_seed)?;
            let counts = counts_for(world, &batch.locations);
            let estimate = uniform_estimate(&batch, &counts, mask.region_area(), tile_size)?;
            (estimate, uniform_proposal(raster, mask, spec.epsilon)?)
        }
        Method::Identity => {
            let proposal = identity_proposal(raster, mask, spec.epsilon)?;
            let estimate = sample_and_estimate(world, &proposal, sampling_n, sample_seed)?;
            (estimate, proposal)
        }
        Method::Isotonic | Method::IsotonicStar => {
            let proposal = fitted_proposal(world, spec, train_n)?;
            let estimate = sample_and_estimate(world, &proposal, sampling_n, sample_seed)?;
            (estimate, proposal)
        }
    };

    Ok(RunOutcome { estimate, proposal, train_n, sampling_n })
}

fn sample_and_estimate(
    world: &SyntheticWorld,
    proposal: &Proposal,
    n: usize,
    seed: u64,
) -> Result<CountEstimate, CliError> {
    let table = AliasTable::new(proposal);
    let batch = draw(proposal, &table, n, seed)?;
    let counts = counts_for(world, &batch.locations);
    Ok(is_estimate(&batch, &counts, world.tiles().tile_size())?)
}

fn counts_for(world: &SyntheticWorld, locations: &[gridtally::Point]) -> Vec<u64> {
    locations.iter().map(|&p| world.count_at(p)).collect()
}
