use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geogrid::{GridGeometry, Point};

/// A gridded covariate layer in the plain-text ESRI ASCII format.
///
/// Values are stored row-major with row 0 at the top, mirroring file order.
/// Missing cells are held as NaN internally and written back out as the
/// grid's nodata sentinel; every present value is finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateRaster {
    geometry: GridGeometry,
    values: Vec<f64>,
    nodata_value: f64,
}

const REQUIRED_KEYS: [&str; 5] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize"];
const DEFAULT_NODATA: f64 = -9999.0;

impl CovariateRaster {
    /// Builds a raster from in-memory values. Entries equal to
    /// `nodata_value` (or NaN) become missing cells; anything else must be
    /// finite and non-negative.
    pub fn new(geometry: GridGeometry, values: Vec<f64>, nodata_value: f64) -> Result<Self> {
        if values.len() != geometry.ncells() {
            return Err(Error::invalid(format!(
                "raster needs {} values, got {}",
                geometry.ncells(),
                values.len()
            )));
        }
        let mut values = values;
        for (i, v) in values.iter_mut().enumerate() {
            if v.is_nan() || *v == nodata_value {
                *v = f64::NAN;
                continue;
            }
            if !v.is_finite() || *v < 0.0 {
                let (row, col) = geometry.rowcol(i);
                return Err(Error::NegativeValue {
                    value: *v,
                    row,
                    col,
                });
            }
        }
        Ok(CovariateRaster {
            geometry,
            values,
            nodata_value,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn nodata_value(&self) -> f64 {
        self.nodata_value
    }

    /// Raw values; missing cells are NaN.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_nodata(&self, index: usize) -> bool {
        self.values[index].is_nan()
    }

    /// Value at `index`, or `None` for a missing cell.
    pub fn value(&self, index: usize) -> Option<f64> {
        let v = self.values[index];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    /// Covariate of the cell containing `p`.
    pub fn covariate_at(&self, p: Point) -> Result<f64> {
        let index = self
            .geometry
            .index_of(p)
            .ok_or(Error::OutOfBounds { x: p.x, y: p.y })?;
        self.value(index).ok_or(Error::NodataCell { x: p.x, y: p.y })
    }

    /// Parses a grid file. Header keys are matched case-insensitively;
    /// `nodata_value` is optional and defaults to -9999.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace().peekable();
        let mut ncols = None;
        let mut nrows = None;
        let mut xll = None;
        let mut yll = None;
        let mut cell_size = None;
        let mut nodata = None;

        while let Some(&tok) = tokens.peek() {
            if tok.parse::<f64>().is_ok() {
                break; // first body value
            }
            let key = tokens.next().unwrap().to_ascii_lowercase();
            let raw = tokens.next().ok_or_else(|| Error::MalformedHeader {
                reason: format!("key {key:?} has no value"),
            })?;
            let value: f64 = raw.parse().map_err(|_| Error::MalformedHeader {
                reason: format!("key {key:?} has non-numeric value {raw:?}"),
            })?;
            match key.as_str() {
                "ncols" => ncols = Some(value),
                "nrows" => nrows = Some(value),
                "xllcorner" => xll = Some(value),
                "yllcorner" => yll = Some(value),
                "cellsize" => cell_size = Some(value),
                "nodata_value" => nodata = Some(value),
                other => {
                    return Err(Error::MalformedHeader {
                        reason: format!("unknown key {other:?}"),
                    })
                }
            }
        }

        for (key, v) in REQUIRED_KEYS.iter().zip([ncols, nrows, xll, yll, cell_size]) {
            if v.is_none() {
                return Err(Error::MalformedHeader {
                    reason: format!("missing key {key:?}"),
                });
            }
        }
        let dim = |v: f64, key: &str| -> Result<usize> {
            if v.fract() != 0.0 || v < 1.0 || v > 1e9 {
                return Err(Error::MalformedHeader {
                    reason: format!("{key} must be a positive integer, got {v}"),
                });
            }
            Ok(v as usize)
        };
        let ncols = dim(ncols.unwrap(), "ncols")?;
        let nrows = dim(nrows.unwrap(), "nrows")?;
        let geometry = GridGeometry::new(ncols, nrows, xll.unwrap(), yll.unwrap(), cell_size.unwrap())?;
        let nodata = nodata.unwrap_or(DEFAULT_NODATA);

        let expected = geometry.ncells();
        let mut values = Vec::with_capacity(expected);
        let mut tokens = tokens;
        while let Some(tok) = tokens.next() {
            if values.len() == expected {
                let found = expected + 1 + tokens.count();
                return Err(Error::TokenCount {
                    expected,
                    found,
                    row: geometry.nrows - 1,
                    col: geometry.ncols - 1,
                });
            }
            let (row, col) = geometry.rowcol(values.len());
            let v: f64 = tok.parse().map_err(|_| Error::BadToken {
                token: tok.to_string(),
                row,
                col,
            })?;
            if v == nodata {
                values.push(f64::NAN);
            } else if !v.is_finite() || v < 0.0 {
                return Err(Error::NegativeValue { value: v, row, col });
            } else {
                values.push(v);
            }
        }
        if values.len() < expected {
            let (row, col) = geometry.rowcol(values.len());
            return Err(Error::TokenCount {
                expected,
                found: values.len(),
                row,
                col,
            });
        }
        CovariateRaster::new(geometry, values, nodata)
    }

    /// Serializes the raster; `load(write(r)) == r` bit-for-bit because
    /// values are printed with Rust's shortest round-trip float format.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn to_text(&self) -> String {
        let g = &self.geometry;
        let mut out = String::new();
        let _ = writeln!(out, "ncols {}", g.ncols);
        let _ = writeln!(out, "nrows {}", g.nrows);
        let _ = writeln!(out, "xllcorner {}", g.xll);
        let _ = writeln!(out, "yllcorner {}", g.yll);
        let _ = writeln!(out, "cellsize {}", g.cell_size);
        let _ = writeln!(out, "NODATA_value {}", self.nodata_value);
        for row in self.values.chunks(g.ncols) {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                if v.is_nan() {
                    let _ = write!(out, "{}", self.nodata_value);
                } else {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Aggregates `factor × factor` blocks of cells by their mean, skipping
    /// missing cells; a block with no data stays missing. The factor must
    /// divide both dimensions.
    pub fn downsample(&self, factor: usize) -> Result<CovariateRaster> {
        let g = &self.geometry;
        if factor == 0 {
            return Err(Error::invalid("downsample factor must be at least 1"));
        }
        if g.ncols % factor != 0 || g.nrows % factor != 0 {
            return Err(Error::NonDivisibleFactor {
                factor,
                ncols: g.ncols,
                nrows: g.nrows,
            });
        }
        let ncols = g.ncols / factor;
        let nrows = g.nrows / factor;
        let mut values = Vec::with_capacity(ncols * nrows);
        for block_row in 0..nrows {
            for block_col in 0..ncols {
                let mut sum = 0.0;
                let mut count = 0usize;
                for dr in 0..factor {
                    for dc in 0..factor {
                        let idx = (block_row * factor + dr) * g.ncols + block_col * factor + dc;
                        let v = self.values[idx];
                        if !v.is_nan() {
                            sum += v;
                            count += 1;
                        }
                    }
                }
                values.push(if count == 0 { f64::NAN } else { sum / count as f64 });
            }
        }
        let geometry = GridGeometry::new(ncols, nrows, g.xll, g.yll, g.cell_size * factor as f64)?;
        CovariateRaster::new(geometry, values, self.nodata_value)
    }
}
