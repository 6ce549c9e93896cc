use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification for callers that map failures to process exit codes:
/// `Input` covers malformed files, bad parameters, and shape mismatches;
/// `Numeric` covers violations detected at run time (empty support, support
/// mismatch between densities, failed normalization).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("malformed grid header: {reason}")]
    MalformedHeader { reason: String },

    #[error("bad numeric token {token:?} at row {row}, column {col}")]
    BadToken { token: String, row: usize, col: usize },

    #[error("grid holds {found} values, expected {expected} (first discrepancy at row {row}, column {col})")]
    TokenCount { expected: usize, found: usize, row: usize, col: usize },

    #[error("negative covariate {value} at row {row}, column {col}")]
    NegativeValue { value: f64, row: usize, col: usize },

    #[error("degenerate polygon: {reason}")]
    DegeneratePolygon { reason: String },

    #[error("region mask is empty: no cell center falls inside the boundary")]
    EmptyRegion,

    #[error("grid geometry mismatch: {reason}")]
    GeometryMismatch { reason: String },

    #[error("tile size {tile_size} produced no tiles inside the region")]
    EmptyTileSet { tile_size: f64 },

    #[error("downsample factor {factor} does not divide a {ncols}x{nrows} grid")]
    NonDivisibleFactor { factor: usize, ncols: usize, nrows: usize },

    #[error("point ({x}, {y}) is outside the grid bounds")]
    OutOfBounds { x: f64, y: f64 },

    #[error("cell containing ({x}, {y}) holds no data")]
    NodataCell { x: f64, y: f64 },

    #[error("point ({x}, {y}) falls outside the tile partition")]
    OutsidePartition { x: f64, y: f64 },

    #[error("tile centers are not materialized for grids above {cap} tiles")]
    TilesNotMaterialized { cap: usize },

    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },

    #[error("proposal has no support: {reason}")]
    NoSupport { reason: String },

    #[error("transform produced {value} at row {row}, column {col}; weights must be finite and non-negative")]
    TransformRange { value: f64, row: usize, col: usize },

    #[error("support violation at row {row}, column {col}: target density is positive where the proposal vanishes")]
    SupportViolation { row: usize, col: usize },

    #[error("proposal mass {mass} failed to normalize to 1")]
    Normalization { mass: f64 },

    #[error("isotonic fit needs at least two samples, got {got}")]
    NotEnoughSamples { got: usize },

    #[error("isotonic fit needs at least two distinct covariate values")]
    IdenticalCovariates,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("sample {index} has non-positive density {value}")]
    NonPositiveDensity { value: f64, index: usize },

    #[error("budget leaves no estimation draws: total {total}, training {train}")]
    BudgetExhausted { total: usize, train: usize },

    #[error("training set of {requested} exceeds the {available} tiles available")]
    TrainingExceedsTiles { requested: usize, available: u64 },

    #[error("{context}: {source}")]
    Json {
        context: String,
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv { context: String, source: csv::Error },

    #[error("{context}")]
    BadRecord { context: String },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NoSupport { .. }
            | Error::TransformRange { .. }
            | Error::SupportViolation { .. }
            | Error::Normalization { .. }
            | Error::NonPositiveDensity { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            reason: reason.into(),
        }
    }
}
