//! Proposal densities over a region and the machinery to fit them.
//!
//! A [`Proposal`] is a piecewise-constant probability density on the cells
//! of a covariate grid: constant within each cell, zero outside the region,
//! integrating to one over it. Builders mix the shaped density with a
//! uniform floor `ε / S_R` so that tail cells keep positive mass and
//! importance weights stay bounded.

mod isotonic;
mod training;

pub use isotonic::{fit_isotonic, IsotonicModel};
pub use training::{
    build_training_set, read_samples_csv, write_samples_csv, CountSource, LabeledSample,
    TrainingSpec, POSITIVE_ATTEMPT_FACTOR,
};

use crate::error::{Error, Result};
use crate::geogrid::{CovariateRaster, GridGeometry, Point, RegionMask};

/// Tolerance on `∫ q = 1`; exceeding it means the construction itself is
/// broken, not that the input was unlucky.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// A normalized, piecewise-constant sampling density over a region.
#[derive(Debug, Clone)]
pub struct Proposal {
    geometry: GridGeometry,
    /// Density per cell in km⁻²; zero off the support.
    density: Vec<f64>,
    support: Vec<bool>,
    epsilon: f64,
    region_area: f64,
    source: String,
}

impl Proposal {
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Region area `S_R` the density integrates over.
    pub fn region_area(&self) -> f64 {
        self.region_area
    }

    /// Label describing how the proposal was built (`"uniform"`,
    /// `"identity"`, `"isotonic"`, ...).
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn density(&self, cell: usize) -> f64 {
        self.density[cell]
    }

    pub fn in_support(&self, cell: usize) -> bool {
        self.support[cell]
    }

    /// Density at a point: zero on region cells off the support, an error
    /// outside the grid.
    pub fn density_at(&self, p: Point) -> Result<f64> {
        let cell = self
            .geometry
            .index_of(p)
            .ok_or(Error::OutOfBounds { x: p.x, y: p.y })?;
        Ok(self.density[cell])
    }

    pub fn support_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.support
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// Probability mass of one cell (density × cell area).
    pub fn cell_mass(&self, cell: usize) -> f64 {
        self.density[cell] * self.geometry.cell_area()
    }

    pub fn total_mass(&self) -> f64 {
        let area = self.geometry.cell_area();
        self.density.iter().map(|d| d * area).sum()
    }
}

/// Core constructor: normalizes non-negative per-cell weights over the
/// support and mixes in the uniform floor,
/// `q = (1 − ε) · w / Z + ε / S_R`.
///
/// With all weights zero the shaped part has nothing to normalize: the
/// construction degenerates to the uniform density when ε > 0 and is an
/// error when ε = 0.
pub fn proposal_from_weights(
    geometry: &GridGeometry,
    support: Vec<bool>,
    weights: &[f64],
    epsilon: f64,
    source: &str,
) -> Result<Proposal> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    if support.len() != geometry.ncells() || weights.len() != geometry.ncells() {
        return Err(Error::invalid("support and weights must cover every cell"));
    }
    let support_count = support.iter().filter(|&&b| b).count();
    if support_count == 0 {
        return Err(Error::NoSupport {
            reason: "region contains no usable cells".to_string(),
        });
    }
    let area = geometry.cell_area();
    let region_area = support_count as f64 * area;

    let mut z = 0.0;
    for (i, (&w, &s)) in weights.iter().zip(&support).enumerate() {
        if !s {
            continue;
        }
        if !w.is_finite() || w < 0.0 {
            let (row, col) = geometry.rowcol(i);
            return Err(Error::TransformRange { value: w, row, col });
        }
        z += w * area;
    }

    let floor = epsilon / region_area;
    let mut density = vec![0.0; geometry.ncells()];
    if z > 0.0 {
        for (i, (&w, &s)) in weights.iter().zip(&support).enumerate() {
            if s {
                density[i] = (1.0 - epsilon) * w / z + floor;
            }
        }
    } else {
        if epsilon == 0.0 {
            return Err(Error::NoSupport {
                reason: "all weights are zero and no uniform floor was requested".to_string(),
            });
        }
        let uniform = 1.0 / region_area;
        for (i, &s) in support.iter().enumerate() {
            if s {
                density[i] = uniform;
            }
        }
    }

    let support = if epsilon > 0.0 || z <= 0.0 {
        support
    } else {
        // Without a floor, zero-weight cells carry no mass and leave the support.
        density.iter().map(|&d| d > 0.0).collect()
    };

    let proposal = Proposal {
        geometry: *geometry,
        density,
        support,
        epsilon,
        region_area,
        source: source.to_string(),
    };
    let mass = proposal.total_mass();
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization { mass });
    }
    Ok(proposal)
}

fn supported_cells(raster: &CovariateRaster, mask: &RegionMask) -> Result<Vec<bool>> {
    raster
        .geometry()
        .matches(mask.geometry(), "raster vs mask")?;
    Ok((0..raster.geometry().ncells())
        .map(|i| mask.included(i) && !raster.is_nodata(i))
        .collect())
}

/// Proposal proportional to the covariate itself (plus the ε floor):
/// the zero-training baseline.
pub fn identity_proposal(
    raster: &CovariateRaster,
    mask: &RegionMask,
    epsilon: f64,
) -> Result<Proposal> {
    let support = supported_cells(raster, mask)?;
    let weights: Vec<f64> = raster.values().iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect();
    proposal_from_weights(raster.geometry(), support, &weights, epsilon, "identity")
}

/// The flat density `1 / S_R` over the region. The ε floor is accepted for
/// symmetry with the other builders but cannot change a flat density.
pub fn uniform_proposal(
    raster: &CovariateRaster,
    mask: &RegionMask,
    epsilon: f64,
) -> Result<Proposal> {
    let support = supported_cells(raster, mask)?;
    let weights = vec![1.0; raster.geometry().ncells()];
    proposal_from_weights(raster.geometry(), support, &weights, epsilon, "uniform")
}

/// Monotone shaping functions applied to the covariate before
/// normalization.
#[derive(Debug, Clone, Copy)]
pub enum Transform<'a> {
    /// A fitted covariate→count model; the workhorse.
    Isotonic(&'a IsotonicModel),
    /// `exp(h)`: accentuates high covariates without any training.
    Exp,
    /// `ln(1 + h)`: compresses high covariates without any training.
    Log1p,
}

impl Transform<'_> {
    fn apply(&self, h: f64) -> f64 {
        match self {
            Transform::Isotonic(model) => model.predict(h),
            Transform::Exp => h.exp(),
            Transform::Log1p => h.ln_1p(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Transform::Isotonic(_) => "isotonic",
            Transform::Exp => "exp",
            Transform::Log1p => "log1p",
        }
    }
}

/// Proposal proportional to `g(h)` for a monotone transform `g`.
pub fn tuned_proposal(
    raster: &CovariateRaster,
    mask: &RegionMask,
    transform: Transform<'_>,
    epsilon: f64,
) -> Result<Proposal> {
    let support = supported_cells(raster, mask)?;
    let geometry = raster.geometry();
    let mut weights = vec![0.0; geometry.ncells()];
    for (i, v) in raster.values().iter().enumerate() {
        if !support[i] {
            continue;
        }
        let w = transform.apply(*v);
        if !w.is_finite() || w < 0.0 {
            let (row, col) = geometry.rowcol(i);
            return Err(Error::TransformRange { value: w, row, col });
        }
        weights[i] = w;
    }
    proposal_from_weights(geometry, support, &weights, epsilon, transform.label())
}

/// `KL(p ‖ q) = Σ_cells p·area · ln(p/q)`, with `0·ln 0 = 0`. Errors where
/// `p` has mass but `q` does not; tiny negative rounding residue clamps to
/// zero.
pub fn kl_divergence(p: &Proposal, q: &Proposal) -> Result<f64> {
    p.geometry.matches(&q.geometry, "kl operands")?;
    let area = p.geometry.cell_area();
    let mut sum = 0.0;
    for i in 0..p.density.len() {
        let pd = p.density[i];
        if pd <= 0.0 {
            continue;
        }
        let qd = q.density[i];
        if qd <= 0.0 {
            let (row, col) = p.geometry.rowcol(i);
            return Err(Error::SupportViolation { row, col });
        }
        sum += pd * area * (pd / qd).ln();
    }
    Ok(sum.max(0.0))
}
