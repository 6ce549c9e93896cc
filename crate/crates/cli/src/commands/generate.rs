//! `gridtally generate` — synthesize a world directory with known truth.

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use gridtally::{generate_world, write_world, CountModel, LinkFunction, WorldConfig};

use crate::config::{pick, FileConfig};
use crate::failure::CliError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LinkKind {
    /// Expected count proportional to the covariate.
    Linear,
    /// Expected count is the covariate raised to a power.
    Power,
    /// Flat expected count above a covariate cutoff, zero below.
    Threshold,
    /// Expected count independent of the covariate.
    Decoupled,
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Directory to write the world into
    #[arg(long)]
    out: PathBuf,

    /// JSON config supplying defaults for any omitted flag
    #[arg(long)]
    config: Option<PathBuf>,

    /// Grid columns
    #[arg(long)]
    ncols: Option<usize>,

    /// Grid rows
    #[arg(long)]
    nrows: Option<usize>,

    /// Covariate cell edge in km
    #[arg(long)]
    cell_size: Option<f64>,

    /// Tile edge in km counts are aggregated over
    #[arg(long)]
    tile_size: Option<f64>,

    /// How the expected count depends on the covariate
    #[arg(long, value_enum)]
    link: Option<LinkKind>,

    /// Rate multiplier for linear and decoupled links
    #[arg(long)]
    scale: Option<f64>,

    /// Exponent for the power link
    #[arg(long)]
    gamma: Option<f64>,

    /// Covariate cutoff for the threshold link
    #[arg(long)]
    cut: Option<f64>,

    /// Expected count above the threshold cutoff
    #[arg(long)]
    level: Option<f64>,

    /// Standard deviation of the log-covariate
    #[arg(long)]
    sigma: Option<f64>,

    /// Multiplicative rate jitter amplitude in [0, 1]
    #[arg(long)]
    noise: Option<f64>,

    /// Fraction of tiles forced to zero count
    #[arg(long)]
    sparsity: Option<f64>,

    /// Round rates to counts instead of drawing them
    #[arg(long)]
    deterministic: bool,

    /// World seed
    #[arg(long)]
    seed: Option<u64>,

    /// Overwrite an existing world directory
    #[arg(long)]
    force: bool,
}

fn link_from(kind: LinkKind, args: &GenerateArgs, file: &FileConfig) -> LinkFunction {
    match kind {
        LinkKind::Linear => LinkFunction::Linear {
            scale: pick(args.scale, file.scale, 3.0),
        },
        LinkKind::Power => LinkFunction::Power {
            gamma: pick(args.gamma, file.gamma, 1.5),
        },
        LinkKind::Threshold => LinkFunction::Threshold {
            cut: pick(args.cut, file.cut, 2.0),
            level: pick(args.level, file.level, 8.0),
        },
        LinkKind::Decoupled => LinkFunction::Decoupled {
            scale: pick(args.scale, file.scale, 3.0),
        },
    }
}

fn parse_link(name: &str) -> Result<LinkKind, CliError> {
    LinkKind::from_str(name, true)
        .map_err(|_| CliError::input(format!("unknown link {name:?} in config")))
}

pub fn run(args: GenerateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;

    let link_kind = match (args.link, file.link.as_deref()) {
        (Some(kind), _) => kind,
        (None, Some(name)) => parse_link(name)?,
        (None, None) => LinkKind::Linear,
    };
    let cell_size = pick(args.cell_size, file.cell_size, 1.0);
    let count_model = if args.deterministic || file.deterministic.unwrap_or(false) {
        CountModel::Deterministic
    } else {
        CountModel::Poisson
    };

    let config = WorldConfig {
        ncols: pick(args.ncols, file.ncols, 64),
        nrows: pick(args.nrows, file.nrows, 64),
        cell_size,
        tile_size: pick(args.tile_size, file.tile_size, cell_size),
        covariate_sigma: pick(args.sigma, file.sigma, 1.0),
        link: link_from(link_kind, &args, &file),
        count_model,
        noise: pick(args.noise, file.noise, 0.0),
        sparsity: pick(args.sparsity, file.sparsity, 0.0),
        seed: pick(args.seed, file.seed, 0),
    };

    if args.out.exists() && !args.force {
        return Err(CliError::input(format!(
            "{} already exists; pass --force to overwrite",
            args.out.display()
        )));
    }

    let world = generate_world(&config)?;
    write_world(&world, &args.out)?;
    println!(
        "world written to {}: {}x{} cells, {} tiles, total count {}",
        args.out.display(),
        config.ncols,
        config.nrows,
        world.tiles().tile_count(),
        world.total_count()
    );
    Ok(())
}
