use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proposal::training::LabeledSample;

/// A non-decreasing step function from covariate to expected tile count,
/// the output of [`fit_isotonic`].
///
/// `breakpoints` are the distinct covariate values seen in training,
/// strictly increasing; `levels[i]` is the fitted value at
/// `breakpoints[i]`. Prediction is left-constant: a query takes the level
/// of the largest breakpoint not exceeding it, clamping below the first
/// breakpoint and above the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicModel {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
    /// Tile edge length (km) the training counts were measured at.
    tile_size: f64,
}

impl IsotonicModel {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn tile_size(&self) -> f64 {
        self.tile_size
    }

    pub fn predict(&self, h: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|b| *b <= h);
        if idx == 0 {
            self.levels[0]
        } else {
            self.levels[idx - 1]
        }
    }

    fn validate(&self) -> Result<()> {
        if self.breakpoints.is_empty() || self.breakpoints.len() != self.levels.len() {
            return Err(Error::BadRecord {
                context: format!(
                    "isotonic model has {} breakpoints and {} levels",
                    self.breakpoints.len(),
                    self.levels.len()
                ),
            });
        }
        if !self.tile_size.is_finite() || self.tile_size <= 0.0 {
            return Err(Error::BadRecord {
                context: format!("isotonic model tile size {} is not positive", self.tile_size),
            });
        }
        for w in self.breakpoints.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::BadRecord {
                    context: format!("breakpoints not strictly increasing: {} then {}", w[0], w[1]),
                });
            }
        }
        for (i, l) in self.levels.iter().enumerate() {
            if !l.is_finite() || *l < 0.0 {
                return Err(Error::BadRecord {
                    context: format!("level {i} is {l}, want finite and non-negative"),
                });
            }
        }
        for w in self.levels.windows(2) {
            if w[0] > w[1] {
                return Err(Error::BadRecord {
                    context: format!("levels decrease: {} then {}", w[0], w[1]),
                });
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: IsotonicModel = serde_json::from_str(&text).map_err(|e| Error::Json {
            context: format!("{}", path.display()),
            source: e,
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            context: format!("{}", path.display()),
            source: e,
        })?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Weighted least-squares isotonic regression of count on covariate by
/// pool-adjacent-violators.
///
/// Samples sharing a covariate value are first merged into one point at
/// their weighted mean count (they can never be separated by a monotone
/// fit). The sweep then maintains a stack of blocks with non-decreasing
/// means, merging backwards whenever a new block undercuts its
/// predecessor; each final block's weighted mean is the fitted level for
/// every breakpoint it covers.
pub fn fit_isotonic(samples: &[LabeledSample], tile_size: f64) -> Result<IsotonicModel> {
    if samples.len() < 2 {
        return Err(Error::NotEnoughSamples {
            got: samples.len(),
        });
    }
    if !tile_size.is_finite() || tile_size <= 0.0 {
        return Err(Error::invalid(format!(
            "tile size must be finite and positive, got {tile_size}"
        )));
    }
    for (i, s) in samples.iter().enumerate() {
        if !s.covariate.is_finite() {
            return Err(Error::invalid(format!(
                "sample {i} has non-finite covariate {}",
                s.covariate
            )));
        }
        if !s.weight.is_finite() || s.weight <= 0.0 {
            return Err(Error::invalid(format!(
                "sample {i} has non-positive weight {}",
                s.weight
            )));
        }
    }

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[a].covariate.total_cmp(&samples[b].covariate));

    // Pre-merge ties: one (covariate, mean, weight) point per distinct h.
    let mut points: Vec<(f64, f64, f64)> = Vec::with_capacity(samples.len());
    for &i in &order {
        let s = &samples[i];
        let y = s.count as f64;
        match points.last_mut() {
            Some((h, mean, weight)) if *h == s.covariate => {
                *mean = (*mean * *weight + y * s.weight) / (*weight + s.weight);
                *weight += s.weight;
            }
            _ => points.push((s.covariate, y, s.weight)),
        }
    }
    if points.len() < 2 {
        return Err(Error::IdenticalCovariates);
    }

    // Blocks of pooled points: (mean, weight, number of points covered).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(points.len());
    for &(_, y, w) in &points {
        blocks.push((y, w, 1));
        while blocks.len() >= 2 {
            let last = blocks[blocks.len() - 1];
            let prev = blocks[blocks.len() - 2];
            if prev.0 <= last.0 {
                break;
            }
            blocks.pop();
            blocks.pop();
            let weight = prev.1 + last.1;
            let mean = (prev.0 * prev.1 + last.0 * last.1) / weight;
            blocks.push((mean, weight, prev.2 + last.2));
        }
    }

    let breakpoints: Vec<f64> = points.iter().map(|&(h, _, _)| h).collect();
    let mut levels = Vec::with_capacity(points.len());
    for &(mean, _, span) in &blocks {
        levels.extend(std::iter::repeat(mean).take(span));
    }

    let model = IsotonicModel {
        breakpoints,
        levels,
        tile_size,
    };
    model.validate()?;
    Ok(model)
}
