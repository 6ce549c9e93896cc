//! `gridtally fit` — train a monotone covariate-to-count model.
//!
//! Labels come either from a world directory (tiles are drawn and labeled
//! against its ground truth) or from a pre-labeled sample CSV.

use std::path::PathBuf;

use clap::Args;

use gridtally::{
    build_training_set, fit_isotonic, identity_proposal, load_world, read_samples_csv,
    substream_seed, uniform_proposal, write_samples_csv, TrainingSpec,
};

use crate::config::{pick, FileConfig};
use crate::failure::CliError;

const TRAIN_STREAM: u64 = 0;

#[derive(Args)]
pub struct FitArgs {
    /// World directory to draw and label training tiles from
    #[arg(long, conflicts_with = "samples")]
    world: Option<PathBuf>,

    /// Pre-labeled sample CSV (x,y,h,f,w) to fit directly
    #[arg(long)]
    samples: Option<PathBuf>,

    /// Path for the fitted model JSON
    #[arg(long)]
    out: PathBuf,

    /// JSON config supplying defaults for any omitted flag
    #[arg(long)]
    config: Option<PathBuf>,

    /// Number of training tiles to draw from the world
    #[arg(long)]
    train_n: Option<usize>,

    /// Fraction of training tiles targeted at positive counts
    #[arg(long)]
    positive_fraction: Option<f64>,

    /// Hard cap on the training set size
    #[arg(long)]
    cap: Option<usize>,

    /// Mixture weight toward uniform in the drawing proposal
    #[arg(long)]
    epsilon: Option<f64>,

    /// Tile edge in km (required with --samples; read from the world otherwise)
    #[arg(long)]
    tile_size: Option<f64>,

    /// Also write the labeled training set to this CSV
    #[arg(long)]
    dump_samples: Option<PathBuf>,

    /// Training seed
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run(args: FitArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;

    let (samples, tile_size) = match (&args.world, &args.samples) {
        (Some(dir), None) => {
            let world = load_world(dir)?;
            let raster = world.raster();
            let mask = world.mask();
            let epsilon = pick(args.epsilon, file.epsilon, 1e-3);
            let base = identity_proposal(raster, mask, epsilon)?;
            let flat = uniform_proposal(raster, mask, 0.0)?;
            let spec = TrainingSpec {
                n_train: pick(args.train_n, file.train_n, 200),
                positive_fraction: pick(args.positive_fraction, file.positive_fraction, 0.5),
                cap: pick(args.cap, file.cap, 5000),
            };
            let seed = pick(args.seed, file.seed, 0);
            let samples = build_training_set(
                &world,
                raster,
                &base,
                &flat,
                &spec,
                substream_seed(seed, TRAIN_STREAM),
            )?;
            (samples, world.tiles().tile_size())
        }
        (None, Some(path)) => {
            let tile_size = pick(args.tile_size, file.tile_size, f64::NAN);
            if !tile_size.is_finite() {
                return Err(CliError::input(
                    "fitting from a sample CSV needs --tile-size".to_string(),
                ));
            }
            (read_samples_csv(path)?, tile_size)
        }
        _ => {
            return Err(CliError::input(
                "pass exactly one of --world or --samples".to_string(),
            ));
        }
    };

    if let Some(dump) = &args.dump_samples {
        write_samples_csv(dump, &samples)?;
    }

    let model = fit_isotonic(&samples, tile_size)?;
    model.write(&args.out)?;
    println!(
        "model written to {}: {} samples, {} steps",
        args.out.display(),
        samples.len(),
        model.levels().len()
    );
    Ok(())
}
