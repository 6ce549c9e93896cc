//! Count estimators and the closed-form quantities that bracket their
//! error.
//!
//! The importance-sampled estimate of a region's object count from a batch
//! drawn with density `q` is the mean of `f(x_i) / (l² q(x_i))`: each term
//! is an unbiased single-draw estimate, so averaging keeps the estimator
//! unbiased for any sample size. The uniform estimator is kept as its own
//! route — `(S_R / l²) · mean(f)` — rather than as a special case, so the
//! two can be checked against each other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proposal::Proposal;
use crate::sampler::SampleBatch;

/// A count estimate and the context needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountEstimate {
    pub estimate: f64,
    /// Number of samples the estimate averaged over.
    pub n: usize,
    /// Tile edge length (km).
    #[serde(rename = "l")]
    pub tile_size: f64,
    /// Label of the proposal the samples came from.
    pub method: String,
    /// Sample standard error of the per-draw terms; 0 for a single draw.
    #[serde(rename = "stderr")]
    pub standard_error: f64,
    pub seed: u64,
}

fn mean_and_stderr(terms: &[f64]) -> (f64, f64) {
    let n = terms.len() as f64;
    let mean = terms.iter().sum::<f64>() / n;
    if terms.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = terms.iter().map(|t| (t - mean) * (t - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

fn validate_batch(batch: &SampleBatch, counts: &[u64], tile_size: f64) -> Result<()> {
    if batch.len() != counts.len() {
        return Err(Error::LengthMismatch {
            left: batch.len(),
            right: counts.len(),
        });
    }
    if batch.is_empty() {
        return Err(Error::invalid("cannot estimate from an empty batch"));
    }
    if !tile_size.is_finite() || tile_size <= 0.0 {
        return Err(Error::invalid(format!(
            "tile size must be finite and positive, got {tile_size}"
        )));
    }
    for (i, &q) in batch.densities.iter().enumerate() {
        if !q.is_finite() || q <= 0.0 {
            return Err(Error::NonPositiveDensity { value: q, index: i });
        }
    }
    Ok(())
}

/// Importance-sampled count estimate: the mean of `f_i / (l² q_i)`.
pub fn is_estimate(batch: &SampleBatch, counts: &[u64], tile_size: f64) -> Result<CountEstimate> {
    validate_batch(batch, counts, tile_size)?;
    let area = tile_size * tile_size;
    let terms: Vec<f64> = counts
        .iter()
        .zip(&batch.densities)
        .map(|(&f, &q)| f as f64 / (area * q))
        .collect();
    let (estimate, standard_error) = mean_and_stderr(&terms);
    Ok(CountEstimate {
        estimate,
        n: batch.len(),
        tile_size,
        method: batch.source.clone(),
        standard_error,
        seed: batch.seed,
    })
}

/// Uniform-sampling count estimate: `(S_R / l²) · mean(f)`. Implemented
/// directly from its own formula, not by delegating to [`is_estimate`].
pub fn uniform_estimate(
    batch: &SampleBatch,
    counts: &[u64],
    region_area: f64,
    tile_size: f64,
) -> Result<CountEstimate> {
    validate_batch(batch, counts, tile_size)?;
    if !region_area.is_finite() || region_area <= 0.0 {
        return Err(Error::invalid(format!(
            "region area must be finite and positive, got {region_area}"
        )));
    }
    let scale = region_area / (tile_size * tile_size);
    let terms: Vec<f64> = counts.iter().map(|&f| scale * f as f64).collect();
    let (estimate, standard_error) = mean_and_stderr(&terms);
    Ok(CountEstimate {
        estimate,
        n: batch.len(),
        tile_size,
        method: batch.source.clone(),
        standard_error,
        seed: batch.seed,
    })
}

/// `|estimate − truth| / truth × 100`. The truth must be positive.
pub fn percent_error(estimate: f64, truth: f64) -> Result<f64> {
    if !truth.is_finite() || truth <= 0.0 {
        return Err(Error::invalid(format!(
            "true count must be positive to take a relative error, got {truth}"
        )));
    }
    Ok((estimate - truth).abs() / truth * 100.0)
}

/// How a labeling budget is divided between fitting a proposal and
/// estimating with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Total labeled tiles available.
    pub total: usize,
    /// Fraction of the total spent on training samples.
    pub train_fraction: f64,
    /// Whether training samples are taken out of the estimation budget
    /// (spent) or granted on top of it.
    pub deduct_training: bool,
}

/// Splits a budget into `(train_n, sampling_n)`. Training size is the
/// rounded fraction; estimation keeps the remainder when training is
/// deducted and the full total otherwise.
pub fn split_budget(budget: &Budget) -> Result<(usize, usize)> {
    if budget.total == 0 {
        return Err(Error::invalid("budget must be at least 1"));
    }
    if !(0.0..=1.0).contains(&budget.train_fraction) {
        return Err(Error::invalid(format!(
            "train fraction must lie in [0, 1], got {}",
            budget.train_fraction
        )));
    }
    let train = (budget.train_fraction * budget.total as f64).round() as usize;
    let sampling = if budget.deduct_training {
        budget.total - train
    } else {
        budget.total
    };
    if sampling == 0 {
        return Err(Error::BudgetExhausted {
            total: budget.total,
            train,
        });
    }
    Ok((train, sampling))
}

/// Exact mean and variance of the single-draw estimator `C · p*(X)/q(X)`
/// with `X ~ q`, by enumeration over cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Enumerates `E_q[C·r]` and `Var_q[C·r]` for the density ratio
/// `r = p*/q`. The mean must come back as the true count — that is the
/// unbiasedness identity — so callers can assert it rather than trust it.
pub fn exact_moments(p_star: &Proposal, q: &Proposal, true_count: f64) -> Result<RatioMoments> {
    p_star
        .geometry()
        .matches(q.geometry(), "moment operands")?;
    let geometry = p_star.geometry();
    let area = geometry.cell_area();
    let mut mean = 0.0;
    let mut second = 0.0;
    for cell in 0..geometry.ncells() {
        let ps = p_star.density(cell);
        let qs = q.density(cell);
        if qs <= 0.0 {
            if ps > 0.0 {
                let (row, col) = geometry.rowcol(cell);
                return Err(Error::SupportViolation { row, col });
            }
            continue;
        }
        let value = true_count * ps / qs;
        let mass = qs * area;
        mean += mass * value;
        second += mass * value * value;
    }
    Ok(RatioMoments {
        mean,
        variance: (second - mean * mean).max(0.0),
    })
}

/// `P_{p*}[ln(p*(X)/q(X)) > threshold]`: the tail mass, measured under the
/// optimal proposal, of the log density ratio.
pub fn tail_probability(p_star: &Proposal, q: &Proposal, threshold: f64) -> Result<f64> {
    p_star.geometry().matches(q.geometry(), "tail operands")?;
    let area = p_star.geometry().cell_area();
    let mut tail = 0.0;
    for cell in 0..p_star.geometry().ncells() {
        let ps = p_star.density(cell);
        if ps <= 0.0 {
            continue;
        }
        let qs = q.density(cell);
        if qs <= 0.0 {
            let (row, col) = p_star.geometry().rowcol(cell);
            return Err(Error::SupportViolation { row, col });
        }
        if (ps / qs).ln() > threshold {
            tail += ps * area;
        }
    }
    Ok(tail.min(1.0))
}

/// Mean-error bound at sample size `exp(L + t)`:
/// `C · (e^{−t/4} + 2 √tail)`, where `tail` is
/// [`tail_probability`] at threshold `L + t/2`.
pub fn concentration_bound(true_count: f64, big_l: f64, t: f64, tail: f64) -> Result<f64> {
    if !true_count.is_finite() || true_count < 0.0 {
        return Err(Error::invalid(format!(
            "true count must be non-negative, got {true_count}"
        )));
    }
    if !big_l.is_finite() || big_l < 0.0 || !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!(
            "bound parameters must be non-negative, got L = {big_l}, t = {t}"
        )));
    }
    if !(0.0..=1.0).contains(&tail) {
        return Err(Error::invalid(format!(
            "tail probability must lie in [0, 1], got {tail}"
        )));
    }
    Ok(true_count * ((-t / 4.0).exp() + 2.0 * tail.sqrt()))
}

/// The sample size the concentration bound speaks about: `⌈exp(L + t)⌉`.
pub fn concentration_sample_size(big_l: f64, t: f64) -> Result<u64> {
    if !big_l.is_finite() || big_l < 0.0 || !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!(
            "bound parameters must be non-negative, got L = {big_l}, t = {t}"
        )));
    }
    Ok((big_l + t).exp().ceil() as u64)
}

/// Overshoot probability of any non-negative unbiased estimator:
/// `P[Ĉ ≥ k·C] ≤ 1/k`.
pub fn markov_bound(k: f64) -> Result<f64> {
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::invalid(format!(
            "overshoot factor must be positive, got {k}"
        )));
    }
    Ok(1.0 / k)
}

/// Variance floor for a single draw from a proposal at KL divergence `kl`
/// from the optimal one: `C² (e^{kl} − 1)`.
pub fn variance_lower_bound(true_count: f64, kl: f64) -> Result<f64> {
    if !true_count.is_finite() || true_count < 0.0 {
        return Err(Error::invalid(format!(
            "true count must be non-negative, got {true_count}"
        )));
    }
    if !kl.is_finite() || kl < 0.0 {
        return Err(Error::invalid(format!(
            "KL divergence must be non-negative, got {kl}"
        )));
    }
    Ok(true_count * true_count * (kl.exp() - 1.0))
}
