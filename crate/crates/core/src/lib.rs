//! Estimate how many objects a large region holds by looking at a tiny,
//! well-chosen fraction of it.
//!
//! The region is divided into square tiles of edge `l`. Sampling locations
//! from a proposal density `q` and averaging `f(x) / (l² q(x))` — the
//! count of the tile containing each draw over the probability of landing
//! there — gives an unbiased estimate of the total count for *any* proposal
//! with full support, at any sample size. Accuracy is another matter: it is
//! entirely a property of how close `q` is to the optimal density, which is
//! proportional to the counts themselves. The crate therefore revolves
//! around building good proposals cheaply:
//!
//! - [`geogrid`]: rasters, region masks, and tile partitions.
//! - [`proposal`]: densities from a covariate — used as-is, or reshaped by
//!   an isotonic regression fitted on a few labeled tiles.
//! - [`sampler`]: reproducible draws from a proposal in O(1) per sample.
//! - [`estimator`]: the estimators plus closed-form error bounds.
//! - [`synthworld`]: synthetic ground truth for calibration experiments.
//! - [`costmodel`]: what exhaustive coverage would cost instead.

pub mod costmodel;
mod error;
pub mod estimator;
pub mod geogrid;
pub mod proposal;
pub mod sampler;
pub mod synthworld;

pub use error::{Error, ErrorKind, Result};

pub use costmodel::{image_cost, images_to_cover, labeling_hours, savings_report, CostParams, CostReport};
pub use estimator::{
    concentration_bound, concentration_sample_size, exact_moments, is_estimate, markov_bound,
    percent_error, split_budget, tail_probability, uniform_estimate, variance_lower_bound, Budget,
    CountEstimate, RatioMoments,
};
pub use geogrid::{
    load_region, make_tile_grid, rasterize_region, write_region, CovariateRaster, GridGeometry,
    Point, RegionMask, TileGrid,
};
pub use proposal::{
    build_training_set, fit_isotonic, identity_proposal, kl_divergence, proposal_from_weights,
    read_samples_csv, tuned_proposal, uniform_proposal, write_samples_csv, CountSource,
    IsotonicModel, LabeledSample, Proposal, TrainingSpec, Transform,
};
pub use sampler::{draw, draw_one, draw_uniform, substream_seed, AliasTable, SampleBatch};
pub use synthworld::{
    generate_world, load_world, write_world, CountModel, LinkFunction, SyntheticWorld, WorldConfig,
};
