use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geogrid::{CovariateRaster, Point};
use crate::proposal::Proposal;
use crate::sampler::{draw_one, substream_seed, AliasTable};

/// One labeled location: where it was drawn, the covariate of its cell, the
/// object count of its tile, and a fitting weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub location: Point,
    pub covariate: f64,
    pub count: u64,
    pub weight: f64,
}

/// Anything that can answer "how many objects does the tile containing this
/// point hold" — a synthetic world, or labels collected by hand.
pub trait CountSource {
    fn count_at(&self, p: Point) -> u64;
    /// Number of distinct tiles labels can come from.
    fn tiles_available(&self) -> u64;
}

#[derive(Debug, Clone, Copy)]
pub struct TrainingSpec {
    /// Requested number of training samples.
    pub n_train: usize,
    /// Fraction of samples drawn by rejection until their tile count is
    /// positive; the rest are drawn uniformly.
    pub positive_fraction: f64,
    /// Hard ceiling on the training set size.
    pub cap: usize,
}

/// Rejection gives up after this many attempts per requested positive and
/// falls back to unconditioned draws from the base proposal, so training
/// terminates even when positives are vanishingly rare.
pub const POSITIVE_ATTEMPT_FACTOR: usize = 100;

/// Assembles a training set: `positive_fraction` of the samples come from
/// the base proposal rejected until they land on a positive-count tile, the
/// remainder uniformly from the region. All samples carry unit weight.
pub fn build_training_set(
    source: &dyn CountSource,
    raster: &CovariateRaster,
    base: &Proposal,
    uniform: &Proposal,
    spec: &TrainingSpec,
    seed: u64,
) -> Result<Vec<LabeledSample>> {
    if spec.n_train == 0 {
        return Err(Error::invalid("training set size must be at least 1"));
    }
    if spec.cap == 0 {
        return Err(Error::invalid("training cap must be at least 1"));
    }
    if !(0.0..=1.0).contains(&spec.positive_fraction) {
        return Err(Error::invalid(format!(
            "positive fraction must lie in [0, 1], got {}",
            spec.positive_fraction
        )));
    }
    raster
        .geometry()
        .matches(base.geometry(), "raster vs base proposal")?;
    raster
        .geometry()
        .matches(uniform.geometry(), "raster vs uniform proposal")?;

    let total = spec.n_train.min(spec.cap);
    if total as u64 > source.tiles_available() {
        return Err(Error::TrainingExceedsTiles {
            requested: total,
            available: source.tiles_available(),
        });
    }
    let n_positive = (spec.positive_fraction * total as f64).round() as usize;
    let n_uniform = total - n_positive;

    let mut samples = Vec::with_capacity(total);

    let base_table = AliasTable::new(base);
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, 0));
    let mut attempts_left = n_positive.saturating_mul(POSITIVE_ATTEMPT_FACTOR);
    while samples.len() < n_positive {
        let (location, _) = draw_one(base, &base_table, &mut rng);
        let count = source.count_at(location);
        if count == 0 && attempts_left > 0 {
            attempts_left -= 1;
            continue;
        }
        // Either a positive, or the attempt budget ran out: keep the draw.
        samples.push(LabeledSample {
            location,
            covariate: raster.covariate_at(location)?,
            count,
            weight: 1.0,
        });
    }

    let uniform_table = AliasTable::new(uniform);
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, 1));
    for _ in 0..n_uniform {
        let (location, _) = draw_one(uniform, &uniform_table, &mut rng);
        samples.push(LabeledSample {
            location,
            covariate: raster.covariate_at(location)?,
            count: source.count_at(location),
            weight: 1.0,
        });
    }

    Ok(samples)
}

/// Writes samples as CSV with header `x,y,h,f,w`.
pub fn write_samples_csv(path: impl AsRef<Path>, samples: &[LabeledSample]) -> Result<()> {
    let path = path.as_ref();
    let ctx = || format!("{}", path.display());
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Csv {
        context: ctx(),
        source: e,
    })?;
    writer
        .write_record(["x", "y", "h", "f", "w"])
        .and_then(|_| {
            for s in samples {
                writer.write_record([
                    s.location.x.to_string(),
                    s.location.y.to_string(),
                    s.covariate.to_string(),
                    s.count.to_string(),
                    s.weight.to_string(),
                ])?;
            }
            writer.flush()?;
            Ok(())
        })
        .map_err(|e| Error::Csv {
            context: ctx(),
            source: e.into(),
        })
}

pub fn read_samples_csv(path: impl AsRef<Path>) -> Result<Vec<LabeledSample>> {
    let path = path.as_ref();
    let ctx = || format!("{}", path.display());
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Csv {
        context: ctx(),
        source: e,
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            context: ctx(),
            source: e,
        })?
        .clone();
    let expected = ["x", "y", "h", "f", "w"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::BadRecord {
            context: format!("{}: header {headers:?}, want x,y,h,f,w", path.display()),
        });
    }
    let mut samples = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            context: ctx(),
            source: e,
        })?;
        let field = |i: usize| -> Result<f64> {
            record[i].parse().map_err(|_| Error::BadRecord {
                context: format!(
                    "{}: record {}: bad number {:?}",
                    path.display(),
                    line + 1,
                    &record[i]
                ),
            })
        };
        let count: u64 = record[3].parse().map_err(|_| Error::BadRecord {
            context: format!(
                "{}: record {}: count {:?} is not a non-negative integer",
                path.display(),
                line + 1,
                &record[3]
            ),
        })?;
        let weight = field(4)?;
        if !weight.is_finite() || weight <= 0.0 {
            return Err(Error::BadRecord {
                context: format!(
                    "{}: record {}: weight {weight} must be positive",
                    path.display(),
                    line + 1
                ),
            });
        }
        samples.push(LabeledSample {
            location: Point::new(field(0)?, field(1)?),
            covariate: field(2)?,
            count,
            weight,
        });
    }
    Ok(samples)
}
