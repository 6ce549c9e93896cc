//! Flat JSON run configuration.
//!
//! Every key mirrors a command-line flag; flags override file values, and
//! built-in defaults fill whatever remains. Unknown keys are rejected so a
//! typo cannot silently fall back to a default.

use std::path::Path;

use serde::Deserialize;

use crate::engine::{Method, TransformKind};
use crate::failure::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    // Shared estimation knobs.
    pub budget: Option<usize>,
    pub train_fraction: Option<f64>,
    pub positive_fraction: Option<f64>,
    pub cap: Option<usize>,
    pub epsilon: Option<f64>,
    pub method: Option<Method>,
    pub transform: Option<TransformKind>,
    pub markov_k: Option<f64>,
    pub seed: Option<u64>,

    // Comparison sweeps.
    pub methods: Option<Vec<Method>>,
    pub budgets: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub workers: Option<usize>,

    // World generation.
    pub ncols: Option<usize>,
    pub nrows: Option<usize>,
    pub cell_size: Option<f64>,
    pub tile_size: Option<f64>,
    pub link: Option<String>,
    pub scale: Option<f64>,
    pub gamma: Option<f64>,
    pub cut: Option<f64>,
    pub level: Option<f64>,
    pub sigma: Option<f64>,
    pub noise: Option<f64>,
    pub sparsity: Option<f64>,
    pub deterministic: Option<bool>,

    // Training set size for `fit`.
    pub train_n: Option<usize>,

    // Cost model.
    pub area: Option<f64>,
    pub percent: Option<f64>,
    pub price_per_sq_km: Option<f64>,
    pub image_pixels: Option<u32>,
    pub gsd_km: Option<f64>,
    pub minutes_per_batch: Option<f64>,
    pub images_per_batch: Option<u32>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("bad config {}: {e}", path.display())))
    }
}

/// Flag value if given, else config value, else the built-in default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag value if given, else config value, else an input error naming the knob.
pub fn pick_required<T>(flag: Option<T>, file: Option<T>, what: &str) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::input(format!("missing {what}: pass --{what} or set it in a config file")))
}
