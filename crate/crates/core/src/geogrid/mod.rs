//! Grid geometry, covariate rasters, region masks, and tile partitions.
//!
//! All spatial types share one convention: a grid is anchored at its
//! lower-left corner `(xll, yll)`, cells are squares of side `cell_size`
//! (kilometres), and every cell owns the half-open box
//! `[lo, lo + cell_size)` on both axes, so a point on a shared edge belongs
//! to exactly one cell. Cell indices are row-major with row 0 at the *top*
//! of the grid, matching the on-disk raster layout.

mod mask;
mod raster;
mod tiles;

pub use mask::{load_region, rasterize_region, write_region, RegionMask};
pub use raster::CovariateRaster;
pub use tiles::{make_tile_grid, TileGrid, MATERIALIZE_CAP};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location in kilometre coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Placement and shape of a grid: column/row counts, lower-left corner,
/// and square cell edge length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub ncols: usize,
    pub nrows: usize,
    pub xll: f64,
    pub yll: f64,
    pub cell_size: f64,
}

impl GridGeometry {
    pub fn new(ncols: usize, nrows: usize, xll: f64, yll: f64, cell_size: f64) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::invalid("grid must have at least one row and column"));
        }
        if !cell_size.is_finite() || cell_size <= 0.0 {
            return Err(Error::invalid(format!(
                "cell size must be finite and positive, got {cell_size}"
            )));
        }
        if !xll.is_finite() || !yll.is_finite() {
            return Err(Error::invalid("grid origin must be finite"));
        }
        Ok(GridGeometry {
            ncols,
            nrows,
            xll,
            yll,
            cell_size,
        })
    }

    pub fn ncells(&self) -> usize {
        self.ncols * self.nrows
    }

    /// Area of one cell in square kilometres.
    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    pub fn width(&self) -> f64 {
        self.ncols as f64 * self.cell_size
    }

    pub fn height(&self) -> f64 {
        self.nrows as f64 * self.cell_size
    }

    /// Index of the cell containing `p` under the half-open convention, or
    /// `None` when `p` lies outside the grid (including its top and right
    /// outer edges).
    pub fn index_of(&self, p: Point) -> Option<usize> {
        let fx = (p.x - self.xll) / self.cell_size;
        let fy = (p.y - self.yll) / self.cell_size;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let col = fx.floor() as usize;
        let row_from_bottom = fy.floor() as usize;
        if col >= self.ncols || row_from_bottom >= self.nrows {
            return None;
        }
        let row = self.nrows - 1 - row_from_bottom;
        Some(row * self.ncols + col)
    }

    /// Row/column of a cell index, row 0 at the top.
    pub fn rowcol(&self, index: usize) -> (usize, usize) {
        (index / self.ncols, index % self.ncols)
    }

    pub fn cell_center(&self, index: usize) -> Point {
        let (row, col) = self.rowcol(index);
        let row_from_bottom = self.nrows - 1 - row;
        Point {
            x: self.xll + (col as f64 + 0.5) * self.cell_size,
            y: self.yll + (row_from_bottom as f64 + 0.5) * self.cell_size,
        }
    }

    /// Point inside cell `index` at fractional offsets `u, v` in `[0, 1)`
    /// from the cell's lower-left corner.
    pub fn point_in_cell(&self, index: usize, u: f64, v: f64) -> Point {
        let (row, col) = self.rowcol(index);
        let row_from_bottom = self.nrows - 1 - row;
        Point {
            x: self.xll + (col as f64 + u) * self.cell_size,
            y: self.yll + (row_from_bottom as f64 + v) * self.cell_size,
        }
    }

    pub(crate) fn matches(&self, other: &GridGeometry, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GeometryMismatch {
                reason: format!("{what}: {self:?} vs {other:?}"),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_open_cell_ownership() {
        let g = GridGeometry::new(4, 3, 0.0, 0.0, 1.0).unwrap();
        // Lower-left corner of a cell belongs to it.
        assert_eq!(g.index_of(Point::new(1.0, 1.0)), Some(g.ncols * 1 + 1));
        // Interior point.
        assert_eq!(g.index_of(Point::new(0.5, 2.5)), Some(0));
        // Top and right outer edges are excluded.
        assert_eq!(g.index_of(Point::new(4.0, 1.5)), None);
        assert_eq!(g.index_of(Point::new(1.5, 3.0)), None);
        assert_eq!(g.index_of(Point::new(-0.001, 1.0)), None);
    }

    #[test]
    fn shared_edges_belong_to_one_cell() {
        let g = GridGeometry::new(4, 4, 2.0, -1.0, 0.5).unwrap();
        for i in 0..g.ncells() {
            let c = g.cell_center(i);
            assert_eq!(g.index_of(c), Some(i));
            if (i + 1) % g.ncols == 0 {
                continue; // right edge of the last column leaves the grid
            }
            // Edge point between cell i and its right neighbour belongs to the neighbour.
            let edge = Point::new(c.x + 0.25, c.y);
            assert_eq!(g.index_of(edge), Some(i + 1));
        }
    }

    #[test]
    fn center_round_trips_through_index() {
        let g = GridGeometry::new(7, 5, -3.25, 10.0, 0.3).unwrap();
        for i in 0..g.ncells() {
            assert_eq!(g.index_of(g.cell_center(i)), Some(i));
        }
    }

    #[test]
    fn rejects_degenerate_shapes() {
        assert!(GridGeometry::new(0, 3, 0.0, 0.0, 1.0).is_err());
        assert!(GridGeometry::new(3, 3, 0.0, 0.0, 0.0).is_err());
        assert!(GridGeometry::new(3, 3, 0.0, 0.0, -1.0).is_err());
        assert!(GridGeometry::new(3, 3, f64::NAN, 0.0, 1.0).is_err());
    }
}
