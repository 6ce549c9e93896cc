use crate::error::{Error, Result};
use crate::geogrid::{Point, RegionMask};

/// Above this many lattice positions the grid stops materializing tile
/// centers and keeps only the idealized tile count `ceil(S_R / l²)`;
/// continental regions at street-level tile sizes would not fit in memory.
pub const MATERIALIZE_CAP: usize = 1_000_000;

/// Partition of a region into square tiles of side `l`, anchored at the
/// grid's lower-left corner. A lattice position is a tile of the partition
/// exactly when its center falls in an included mask cell.
#[derive(Debug, Clone)]
pub struct TileGrid {
    origin: Point,
    tile_size: f64,
    lattice_cols: usize,
    lattice_rows: usize,
    region_area: f64,
    tiles: TileSet,
}

#[derive(Debug, Clone)]
enum TileSet {
    Materialized {
        centers: Vec<Point>,
        /// Tile index per lattice position, row 0 at the bottom.
        membership: Vec<Option<u32>>,
    },
    CountOnly(u64),
}

pub fn make_tile_grid(mask: &RegionMask, tile_size: f64) -> Result<TileGrid> {
    if !tile_size.is_finite() || tile_size <= 0.0 {
        return Err(Error::invalid(format!(
            "tile size must be finite and positive, got {tile_size}"
        )));
    }
    let g = mask.geometry();
    let lattice_cols = (g.width() / tile_size).ceil() as usize;
    let lattice_rows = (g.height() / tile_size).ceil() as usize;
    if lattice_cols == 0 || lattice_rows == 0 {
        return Err(Error::EmptyTileSet { tile_size });
    }
    let origin = Point::new(g.xll, g.yll);
    let region_area = mask.region_area();

    if lattice_cols.saturating_mul(lattice_rows) > MATERIALIZE_CAP {
        // Idealized count; the guard keeps an exact multiple from ceiling up.
        let ideal = region_area / (tile_size * tile_size);
        let count = (ideal * (1.0 - 1e-12)).ceil() as u64;
        return Ok(TileGrid {
            origin,
            tile_size,
            lattice_cols,
            lattice_rows,
            region_area,
            tiles: TileSet::CountOnly(count),
        });
    }

    let mut centers = Vec::new();
    let mut membership = vec![None; lattice_cols * lattice_rows];
    for row in 0..lattice_rows {
        for col in 0..lattice_cols {
            let center = Point::new(
                origin.x + (col as f64 + 0.5) * tile_size,
                origin.y + (row as f64 + 0.5) * tile_size,
            );
            if mask.contains(center) {
                membership[row * lattice_cols + col] = Some(centers.len() as u32);
                centers.push(center);
            }
        }
    }
    if centers.is_empty() {
        return Err(Error::EmptyTileSet { tile_size });
    }
    Ok(TileGrid {
        origin,
        tile_size,
        lattice_cols,
        lattice_rows,
        region_area,
        tiles: TileSet::Materialized {
            centers,
            membership,
        },
    })
}

impl TileGrid {
    pub fn tile_size(&self) -> f64 {
        self.tile_size
    }

    pub fn tile_area(&self) -> f64 {
        self.tile_size * self.tile_size
    }

    /// Region area `S_R` the partition was built over.
    pub fn region_area(&self) -> f64 {
        self.region_area
    }

    pub fn tile_count(&self) -> u64 {
        match &self.tiles {
            TileSet::Materialized { centers, .. } => centers.len() as u64,
            TileSet::CountOnly(n) => *n,
        }
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.tiles, TileSet::Materialized { .. })
    }

    /// Tile centers in lattice order (bottom row first).
    pub fn centers(&self) -> Result<&[Point]> {
        match &self.tiles {
            TileSet::Materialized { centers, .. } => Ok(centers),
            TileSet::CountOnly(_) => Err(Error::TilesNotMaterialized {
                cap: MATERIALIZE_CAP,
            }),
        }
    }

    pub fn center_of(&self, tile: usize) -> Result<Point> {
        Ok(self.centers()?[tile])
    }

    /// Index of the partition tile containing `p`. Points inside the lattice
    /// but in a dropped (center-outside-region) position are distinguishable
    /// from points off the lattice entirely.
    pub fn tile_of(&self, p: Point) -> Result<usize> {
        let membership = match &self.tiles {
            TileSet::Materialized { membership, .. } => membership,
            TileSet::CountOnly(_) => {
                return Err(Error::TilesNotMaterialized {
                    cap: MATERIALIZE_CAP,
                })
            }
        };
        let fx = (p.x - self.origin.x) / self.tile_size;
        let fy = (p.y - self.origin.y) / self.tile_size;
        if fx < 0.0 || fy < 0.0 {
            return Err(Error::OutOfBounds { x: p.x, y: p.y });
        }
        let col = fx.floor() as usize;
        let row = fy.floor() as usize;
        if col >= self.lattice_cols || row >= self.lattice_rows {
            return Err(Error::OutOfBounds { x: p.x, y: p.y });
        }
        membership[row * self.lattice_cols + col]
            .map(|i| i as usize)
            .ok_or(Error::OutsidePartition { x: p.x, y: p.y })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geogrid::GridGeometry;

    #[test]
    fn unit_tiles_match_included_cells() {
        let g = GridGeometry::new(6, 4, 0.0, 0.0, 1.0).unwrap();
        let mask = RegionMask::full(g);
        let tiles = make_tile_grid(&mask, 1.0).unwrap();
        assert_eq!(tiles.tile_count(), 24);
        for i in 0..g.ncells() {
            let c = g.cell_center(i);
            let t = tiles.tile_of(c).unwrap();
            assert_eq!(tiles.center_of(t).unwrap(), c);
        }
    }

    #[test]
    fn partial_mask_drops_tiles() {
        // Include only the left 2 columns of a 4x4 grid; 2-cell tiles whose
        // centers fall in the excluded half are not part of the partition.
        let g = GridGeometry::new(4, 4, 0.0, 0.0, 1.0).unwrap();
        let included: Vec<bool> = (0..16).map(|i| i % 4 < 2).collect();
        let mask = RegionMask::new(g, included).unwrap();
        let tiles = make_tile_grid(&mask, 2.0).unwrap();
        assert_eq!(tiles.tile_count(), 2);
        assert!(tiles.tile_of(Point::new(0.5, 0.5)).is_ok());
        assert!(matches!(
            tiles.tile_of(Point::new(3.5, 0.5)),
            Err(Error::OutsidePartition { .. })
        ));
        assert!(matches!(
            tiles.tile_of(Point::new(-0.5, 0.5)),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn coverage_stays_within_one_tile_band() {
        let g = GridGeometry::new(10, 7, 0.0, 0.0, 1.0).unwrap();
        let mask = RegionMask::full(g);
        for l in [1.0, 1.5, 2.0, 3.0] {
            let tiles = make_tile_grid(&mask, l).unwrap();
            let covered = tiles.tile_count() as f64 * l * l;
            // Tile centers all lie inside the region, so coverage cannot
            // exceed the region grown by half a tile on each side.
            let bound = (g.width() + l) * (g.height() + l);
            assert!(covered <= bound, "l={l}: {covered} > {bound}");
            assert!(tiles.tile_count() > 0);
        }
    }

    #[test]
    fn oversized_tile_yields_empty_set() {
        let g = GridGeometry::new(4, 4, 0.0, 0.0, 1.0).unwrap();
        // Include only the lower-left cell: an 8 km tile centered at (4, 4)
        // misses it.
        let mut included = vec![false; 16];
        included[12] = true; // row 3 (bottom), col 0
        let mask = RegionMask::new(g, included).unwrap();
        assert!(matches!(
            make_tile_grid(&mask, 8.0),
            Err(Error::EmptyTileSet { .. })
        ));
    }

    #[test]
    fn continental_grid_reports_idealized_count() {
        // One huge mask cell of 582,650 km² and 0.192 km tiles: far past the
        // materialization cap, so the count is ceil(area / l²).
        let side = 582_650.0_f64.sqrt();
        let g = GridGeometry::new(1, 1, 0.0, 0.0, side).unwrap();
        let mask = RegionMask::full(g);
        let tiles = make_tile_grid(&mask, 0.192).unwrap();
        assert!(!tiles.is_materialized());
        assert_eq!(tiles.tile_count(), 15_805_393);
        assert!(tiles.centers().is_err());
        assert!(matches!(
            tiles.tile_of(Point::new(1.0, 1.0)),
            Err(Error::TilesNotMaterialized { .. })
        ));
    }

    #[test]
    fn exact_multiple_does_not_ceil_up() {
        let g = GridGeometry::new(8, 8, 0.0, 0.0, 1.0).unwrap();
        let mask = RegionMask::full(g);
        let tiles = make_tile_grid(&mask, 2.0).unwrap();
        assert_eq!(tiles.tile_count(), 16);
    }
}
