//! Synthetic ground-truth worlds: a covariate field with a known
//! relationship to per-tile object counts, so estimators can be scored
//! against an exhaustive truth and the optimal proposal is available in
//! closed form.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::RatioMoments;
use crate::geogrid::{
    load_region, make_tile_grid, rasterize_region, write_region, CovariateRaster, GridGeometry,
    Point, RegionMask, TileGrid,
};
use crate::proposal::{proposal_from_weights, CountSource, Proposal};
use crate::sampler::substream_seed;

/// How the expected count of a tile depends on the covariate at its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkFunction {
    /// `rate = scale · h`.
    Linear { scale: f64 },
    /// `rate = h^gamma`.
    Power { gamma: f64 },
    /// `rate = level` where `h ≥ cut`, zero elsewhere.
    Threshold { cut: f64, level: f64 },
    /// Rate is an independent log-normal draw; the covariate carries no
    /// information at all.
    Decoupled { scale: f64 },
}

impl LinkFunction {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            LinkFunction::Linear { scale } | LinkFunction::Decoupled { scale } => {
                scale.is_finite() && *scale > 0.0
            }
            LinkFunction::Power { gamma } => gamma.is_finite() && *gamma > 0.0,
            LinkFunction::Threshold { cut, level } => {
                cut.is_finite() && level.is_finite() && *level >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("bad link parameters: {self:?}")))
        }
    }
}

/// How a realized count is drawn from a tile's rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountModel {
    Poisson,
    /// `count = round(rate)`: no sampling noise, for exact-arithmetic
    /// checks.
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub ncols: usize,
    pub nrows: usize,
    /// Covariate cell edge (km).
    pub cell_size: f64,
    /// Tile edge (km) counts are aggregated over.
    pub tile_size: f64,
    /// Standard deviation of the log-covariate; 0 gives a constant field.
    pub covariate_sigma: f64,
    pub link: LinkFunction,
    pub count_model: CountModel,
    /// Multiplicative rate jitter: `rate · max(0, 1 + noise·U(−1,1))`.
    pub noise: f64,
    /// Fraction of tiles (the lowest-rate ones) forced to zero count.
    pub sparsity: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            ncols: 64,
            nrows: 64,
            cell_size: 1.0,
            tile_size: 1.0,
            covariate_sigma: 1.0,
            link: LinkFunction::Linear { scale: 3.0 },
            count_model: CountModel::Poisson,
            noise: 0.0,
            sparsity: 0.0,
            seed: 0,
        }
    }
}

impl WorldConfig {
    fn validate(&self) -> Result<()> {
        self.link.validate()?;
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::invalid(format!(
                "sparsity must lie in [0, 1], got {}",
                self.sparsity
            )));
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return Err(Error::invalid(format!(
                "noise must be non-negative, got {}",
                self.noise
            )));
        }
        if !self.covariate_sigma.is_finite() || self.covariate_sigma < 0.0 {
            return Err(Error::invalid(format!(
                "covariate sigma must be non-negative, got {}",
                self.covariate_sigma
            )));
        }
        Ok(())
    }
}

/// A world with fully known counts.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    raster: CovariateRaster,
    mask: RegionMask,
    tiles: TileGrid,
    counts: Vec<u64>,
    total_count: u64,
    config: Option<WorldConfig>,
}

// Substream ordinals for the independent generation stages.
const STREAM_COVARIATE: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_COUNTS: u64 = 2;
const STREAM_DECOUPLED: u64 = 3;

/// Generates a world: log-normal covariate field, per-tile rates through
/// the link, realized counts, then sparsity zeroing.
///
/// In deterministic linear mode with `tile_size == cell_size` the covariate
/// is re-derived as `count / scale` after counts are fixed, so the identity
/// proposal built from the world's own covariate is exactly the optimal
/// one — rounding, jitter, and sparsity included.
pub fn generate_world(config: &WorldConfig) -> Result<SyntheticWorld> {
    config.validate()?;
    let geometry = GridGeometry::new(config.ncols, config.nrows, 0.0, 0.0, config.cell_size)?;

    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(config.seed, STREAM_COVARIATE));
    let values: Vec<f64> = (0..geometry.ncells())
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (config.covariate_sigma * z).exp()
        })
        .collect();
    let mut raster = CovariateRaster::new(geometry, values, -9999.0)?;
    let mask = RegionMask::full(geometry);
    let tiles = make_tile_grid(&mask, config.tile_size)?;
    let centers = tiles.centers()?;

    // Expected count per tile, driven by the covariate at the tile center.
    let mut rates: Vec<f64> = match config.link {
        LinkFunction::Decoupled { scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(config.seed, STREAM_DECOUPLED));
            (0..centers.len())
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    scale * (config.covariate_sigma * z).exp()
                })
                .collect()
        }
        link => centers
            .iter()
            .map(|&c| {
                let h = raster.covariate_at(c)?;
                Ok(match link {
                    LinkFunction::Linear { scale } => scale * h,
                    LinkFunction::Power { gamma } => h.powf(gamma),
                    LinkFunction::Threshold { cut, level } => {
                        if h >= cut {
                            level
                        } else {
                            0.0
                        }
                    }
                    LinkFunction::Decoupled { .. } => unreachable!(),
                })
            })
            .collect::<Result<_>>()?,
    };

    if config.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(config.seed, STREAM_NOISE));
        for rate in &mut rates {
            let u: f64 = rng.random_range(-1.0..1.0);
            *rate *= (1.0 + config.noise * u).max(0.0);
        }
    }

    let mut counts: Vec<u64> = match config.count_model {
        CountModel::Poisson => {
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(config.seed, STREAM_COUNTS));
            rates
                .iter()
                .map(|&rate| {
                    if rate > 0.0 {
                        Poisson::new(rate).expect("positive finite rate").sample(&mut rng) as u64
                    } else {
                        0
                    }
                })
                .collect()
        }
        CountModel::Deterministic => rates.iter().map(|&rate| rate.round() as u64).collect(),
    };

    if config.sparsity > 0.0 {
        let zeroed = (config.sparsity * counts.len() as f64).round() as usize;
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| rates[a].total_cmp(&rates[b]).then(a.cmp(&b)));
        for &t in order.iter().take(zeroed) {
            counts[t] = 0;
        }
    }

    if config.count_model == CountModel::Deterministic
        && config.tile_size == config.cell_size
    {
        if let LinkFunction::Linear { scale } = config.link {
            let mut values = raster.values().to_vec();
            for (t, &center) in centers.iter().enumerate() {
                let cell = geometry.index_of(center).expect("center inside grid");
                values[cell] = counts[t] as f64 / scale;
            }
            raster = CovariateRaster::new(geometry, values, raster.nodata_value())?;
        }
    }

    let total_count = counts.iter().sum();
    Ok(SyntheticWorld {
        raster,
        mask,
        tiles,
        counts,
        total_count,
        config: Some(*config),
    })
}

impl SyntheticWorld {
    /// Assembles a world from explicit parts, for tests and hand-built
    /// scenarios. Counts are per tile of `make_tile_grid(mask, tile_size)`,
    /// in lattice order.
    pub fn from_parts(
        raster: CovariateRaster,
        mask: RegionMask,
        tile_size: f64,
        counts: Vec<u64>,
    ) -> Result<Self> {
        raster
            .geometry()
            .matches(mask.geometry(), "raster vs mask")?;
        let tiles = make_tile_grid(&mask, tile_size)?;
        if counts.len() as u64 != tiles.tile_count() {
            return Err(Error::LengthMismatch {
                left: counts.len(),
                right: tiles.tile_count() as usize,
            });
        }
        let total_count = counts.iter().sum();
        Ok(SyntheticWorld {
            raster,
            mask,
            tiles,
            counts,
            total_count,
            config: None,
        })
    }

    pub fn raster(&self) -> &CovariateRaster {
        &self.raster
    }

    pub fn mask(&self) -> &RegionMask {
        &self.mask
    }

    pub fn tiles(&self) -> &TileGrid {
        &self.tiles
    }

    pub fn tile_size(&self) -> f64 {
        self.tiles.tile_size()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// The exhaustive truth: the sum of all tile counts.
    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    pub fn config(&self) -> Option<&WorldConfig> {
        self.config.as_ref()
    }

    /// Count of the tile containing `p`; zero for points off the partition,
    /// which by construction hold no objects.
    pub fn count_at(&self, p: Point) -> u64 {
        match self.tiles.tile_of(p) {
            Ok(t) => self.counts[t],
            Err(_) => 0,
        }
    }

    /// The zero-variance proposal: density proportional to the count of the
    /// covering tile, mixed with the ε floor.
    pub fn optimal_proposal(&self, epsilon: f64) -> Result<Proposal> {
        let geometry = self.raster.geometry();
        let mut weights = vec![0.0; geometry.ncells()];
        let mut support = vec![false; geometry.ncells()];
        for cell in 0..geometry.ncells() {
            if !self.mask.included(cell) || self.raster.is_nodata(cell) {
                continue;
            }
            support[cell] = true;
            weights[cell] = self.count_at(geometry.cell_center(cell)) as f64;
        }
        proposal_from_weights(geometry, support, &weights, epsilon, "optimal")
    }

    /// Exact mean and variance of the single-draw estimate
    /// `f(X) / (l² q(X))` with `X ~ q`, by enumeration over tiles. The mean
    /// coming back as the total count is the unbiasedness identity.
    ///
    /// The proposal need not live on the world's grid — a density built
    /// from a downsampled covariate works — but it must be constant within
    /// each tile, which holds whenever its cells are no finer than the
    /// tiles and aligned with them.
    pub fn enumerated_moments(&self, q: &Proposal) -> Result<RatioMoments> {
        let centers = self.tiles.centers()?;
        let tile_area = self.tiles.tile_area();
        let mut mean = 0.0;
        let mut second = 0.0;
        for (t, &center) in centers.iter().enumerate() {
            let qd = q.density_at(center)?;
            let f = self.counts[t] as f64;
            if qd <= 0.0 {
                if f > 0.0 {
                    let (row, col) = self
                        .raster
                        .geometry()
                        .rowcol(self.raster.geometry().index_of(center).unwrap_or(0));
                    return Err(Error::SupportViolation { row, col });
                }
                continue;
            }
            let value = f / (tile_area * qd);
            let mass = qd * tile_area;
            mean += mass * value;
            second += mass * value * value;
        }
        Ok(RatioMoments {
            mean,
            variance: (second - mean * mean).max(0.0),
        })
    }
}

impl CountSource for SyntheticWorld {
    fn count_at(&self, p: Point) -> u64 {
        SyntheticWorld::count_at(self, p)
    }

    fn tiles_available(&self) -> u64 {
        self.tiles.tile_count()
    }
}

#[derive(Serialize, Deserialize)]
struct WorldMeta {
    schema: String,
    ncols: usize,
    nrows: usize,
    cell_size: f64,
    tile_size: f64,
    total_count: u64,
    #[serde(default)]
    generation: Option<WorldConfig>,
}

const COVARIATE_FILE: &str = "covariate.asc";
const REGION_FILE: &str = "region.json";
const COUNTS_FILE: &str = "counts.csv";
const META_FILE: &str = "metadata.json";

/// Serializes a world as a directory: `covariate.asc`, `region.json`,
/// `counts.csv` (tile_index,x,y,count), and `metadata.json`.
///
/// Only worlds whose mask is the full grid (minus nodata cells, which the
/// covariate itself records) can round-trip through the polygon region
/// file; anything else is rejected rather than silently reshaped.
pub fn write_world(world: &SyntheticWorld, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let g = world.raster.geometry();
    for cell in 0..g.ncells() {
        if world.mask.included(cell) != !world.raster.is_nodata(cell) {
            return Err(Error::invalid(
                "only worlds masked by their covariate's nodata cells can be written",
            ));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    world.raster.write(dir.join(COVARIATE_FILE))?;

    let rect = [
        Point::new(g.xll, g.yll),
        Point::new(g.xll + g.width(), g.yll),
        Point::new(g.xll + g.width(), g.yll + g.height()),
        Point::new(g.xll, g.yll + g.height()),
    ];
    write_region(dir.join(REGION_FILE), &rect)?;

    let counts_path = dir.join(COUNTS_FILE);
    let ctx = || format!("{}", counts_path.display());
    let mut writer = csv::Writer::from_path(&counts_path).map_err(|e| Error::Csv {
        context: ctx(),
        source: e,
    })?;
    let centers = world.tiles.centers()?;
    writer
        .write_record(["tile_index", "x", "y", "count"])
        .and_then(|_| {
            for (t, center) in centers.iter().enumerate() {
                writer.write_record([
                    t.to_string(),
                    center.x.to_string(),
                    center.y.to_string(),
                    world.counts[t].to_string(),
                ])?;
            }
            writer.flush()?;
            Ok(())
        })
        .map_err(|e| Error::Csv {
            context: ctx(),
            source: e.into(),
        })?;

    let meta = WorldMeta {
        schema: "1".to_string(),
        ncols: g.ncols,
        nrows: g.nrows,
        cell_size: g.cell_size,
        tile_size: world.tiles.tile_size(),
        total_count: world.total_count,
        generation: world.config,
    };
    let meta_path = dir.join(META_FILE);
    let mut text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Json {
        context: format!("{}", meta_path.display()),
        source: e,
    })?;
    text.push('\n');
    fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))
}

/// Loads a world directory, cross-checking the pieces against each other:
/// grid shape against the metadata, tile count and centers against the
/// partition rebuilt from the mask, and the stored total against the sum
/// of the counts.
pub fn load_world(dir: impl AsRef<Path>) -> Result<SyntheticWorld> {
    let dir = dir.as_ref();
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: WorldMeta = serde_json::from_str(&text).map_err(|e| Error::Json {
        context: format!("{}", meta_path.display()),
        source: e,
    })?;
    if meta.schema != "1" {
        return Err(Error::BadRecord {
            context: format!("{}: unsupported schema {:?}", meta_path.display(), meta.schema),
        });
    }

    let raster = CovariateRaster::load(dir.join(COVARIATE_FILE))?;
    let g = raster.geometry();
    if g.ncols != meta.ncols || g.nrows != meta.nrows || g.cell_size != meta.cell_size {
        return Err(Error::GeometryMismatch {
            reason: format!(
                "covariate grid is {}x{} at {}, metadata says {}x{} at {}",
                g.ncols, g.nrows, g.cell_size, meta.ncols, meta.nrows, meta.cell_size
            ),
        });
    }

    let polygon = load_region(dir.join(REGION_FILE))?;
    let mask = rasterize_region(&polygon, g)?.exclude_nodata(&raster)?;
    let tiles = make_tile_grid(&mask, meta.tile_size)?;
    let centers = tiles.centers()?;

    let counts_path = dir.join(COUNTS_FILE);
    let mut reader = csv::Reader::from_path(&counts_path).map_err(|e| Error::Csv {
        context: format!("{}", counts_path.display()),
        source: e,
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            context: format!("{}", counts_path.display()),
            source: e,
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["tile_index", "x", "y", "count"] {
        return Err(Error::BadRecord {
            context: format!(
                "{}: header {headers:?}, want tile_index,x,y,count",
                counts_path.display()
            ),
        });
    }
    let mut counts = vec![u64::MAX; centers.len()];
    let mut seen = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            context: format!("{}", counts_path.display()),
            source: e,
        })?;
        let bad = |what: &str| Error::BadRecord {
            context: format!("{}: {what} in {record:?}", counts_path.display()),
        };
        let t: usize = record[0].parse().map_err(|_| bad("bad tile index"))?;
        if t >= centers.len() {
            return Err(bad("tile index out of range"));
        }
        if counts[t] != u64::MAX {
            return Err(bad("duplicate tile index"));
        }
        let x: f64 = record[1].parse().map_err(|_| bad("bad x"))?;
        let y: f64 = record[2].parse().map_err(|_| bad("bad y"))?;
        let c = centers[t];
        if (x - c.x).abs() > 1e-9 || (y - c.y).abs() > 1e-9 {
            return Err(bad("tile center does not match the partition"));
        }
        counts[t] = record[3].parse().map_err(|_| bad("bad count"))?;
        seen += 1;
    }
    if seen != centers.len() {
        return Err(Error::BadRecord {
            context: format!(
                "{}: {seen} tiles listed, partition has {}",
                counts_path.display(),
                centers.len()
            ),
        });
    }

    let total: u64 = counts.iter().sum();
    if total != meta.total_count {
        return Err(Error::BadRecord {
            context: format!(
                "{}: counts sum to {total}, metadata says {}",
                counts_path.display(),
                meta.total_count
            ),
        });
    }

    Ok(SyntheticWorld {
        raster,
        mask,
        tiles,
        counts,
        total_count: total,
        config: meta.generation,
    })
}
