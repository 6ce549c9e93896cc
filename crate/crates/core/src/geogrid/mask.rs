use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geogrid::{CovariateRaster, GridGeometry, Point};

/// The cells of a grid that belong to the region of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    geometry: GridGeometry,
    included: Vec<bool>,
    included_count: usize,
}

impl RegionMask {
    pub fn new(geometry: GridGeometry, included: Vec<bool>) -> Result<Self> {
        if included.len() != geometry.ncells() {
            return Err(Error::invalid(format!(
                "mask needs {} flags, got {}",
                geometry.ncells(),
                included.len()
            )));
        }
        let included_count = included.iter().filter(|&&b| b).count();
        if included_count == 0 {
            return Err(Error::EmptyRegion);
        }
        Ok(RegionMask {
            geometry,
            included,
            included_count,
        })
    }

    /// Mask covering every cell of the grid.
    pub fn full(geometry: GridGeometry) -> Self {
        let included = vec![true; geometry.ncells()];
        RegionMask {
            included_count: included.len(),
            geometry,
            included,
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn included(&self, index: usize) -> bool {
        self.included[index]
    }

    pub fn included_count(&self) -> usize {
        self.included_count
    }

    /// Indices of included cells in row-major order.
    pub fn included_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.included
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// Region area `S_R` in square kilometres.
    pub fn region_area(&self) -> f64 {
        self.included_count as f64 * self.geometry.cell_area()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.geometry
            .index_of(p)
            .map(|i| self.included[i])
            .unwrap_or(false)
    }

    /// Shrinks the mask to cells that also carry data in `raster`, so that
    /// region area, proposals, and tile partitions all agree on the same
    /// effective region.
    pub fn exclude_nodata(&self, raster: &CovariateRaster) -> Result<RegionMask> {
        self.geometry.matches(raster.geometry(), "mask vs raster")?;
        let included = self
            .included
            .iter()
            .enumerate()
            .map(|(i, &b)| b && !raster.is_nodata(i))
            .collect();
        RegionMask::new(self.geometry, included)
    }
}

/// Marks every cell whose center lies inside the polygon (even-odd rule) or
/// exactly on its boundary. The polygon is closed implicitly.
pub fn rasterize_region(polygon: &[Point], geometry: &GridGeometry) -> Result<RegionMask> {
    if polygon.len() < 3 {
        return Err(Error::DegeneratePolygon {
            reason: format!("{} vertices, need at least 3", polygon.len()),
        });
    }
    for (i, v) in polygon.iter().enumerate() {
        if !v.x.is_finite() || !v.y.is_finite() {
            return Err(Error::DegeneratePolygon {
                reason: format!("vertex {i} is not finite"),
            });
        }
    }
    if shoelace_area(polygon) == 0.0 {
        return Err(Error::DegeneratePolygon {
            reason: "zero enclosed area".to_string(),
        });
    }
    let included = (0..geometry.ncells())
        .map(|i| {
            let c = geometry.cell_center(i);
            even_odd_inside(c, polygon) || on_boundary(c, polygon)
        })
        .collect();
    RegionMask::new(*geometry, included)
}

fn shoelace_area(polygon: &[Point]) -> f64 {
    let mut twice = 0.0;
    let n = polygon.len();
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    twice.abs() / 2.0
}

/// Even-odd crossing test: a point is inside when a ray to the right
/// crosses an odd number of edges.
fn even_odd_inside(p: Point, polygon: &[Point]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    let mut j = n - 1;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Boundary ties count as inside; the test is exact, which is what the
/// half-open grid convention needs when centers land on representable edges.
fn on_boundary(p: Point, polygon: &[Point]) -> bool {
    let n = polygon.len();
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if cross != 0.0 {
            continue;
        }
        let within_x = p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x);
        let within_y = p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y);
        if within_x && within_y {
            return true;
        }
    }
    false
}

#[derive(Serialize, Deserialize)]
struct RegionFile {
    polygon: Vec<[f64; 2]>,
}

/// Reads a region boundary from JSON of the form `{"polygon": [[x, y], ...]}`.
pub fn load_region(path: impl AsRef<Path>) -> Result<Vec<Point>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: RegionFile = serde_json::from_str(&text).map_err(|e| Error::Json {
        context: format!("{}", path.display()),
        source: e,
    })?;
    Ok(file
        .polygon
        .into_iter()
        .map(|[x, y]| Point::new(x, y))
        .collect())
}

pub fn write_region(path: impl AsRef<Path>, polygon: &[Point]) -> Result<()> {
    let path = path.as_ref();
    let file = RegionFile {
        polygon: polygon.iter().map(|p| [p.x, p.y]).collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::Json {
        context: format!("{}", path.display()),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_geometry(n: usize) -> GridGeometry {
        GridGeometry::new(n, n, 0.0, 0.0, 1.0).unwrap()
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point> {
        vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ]
    }

    #[test]
    fn half_covering_rectangle_splits_columns() {
        // Left half of a 2x2 grid of 0.5-cells: left column in, right out.
        let g = GridGeometry::new(2, 2, 0.0, 0.0, 0.5).unwrap();
        let mask = rasterize_region(&rect(0.0, 0.0, 0.5, 1.0), &g).unwrap();
        assert!(mask.included(0));
        assert!(!mask.included(1));
        assert!(mask.included(2));
        assert!(!mask.included(3));
        assert_eq!(mask.region_area(), 0.5);
    }

    #[test]
    fn center_on_boundary_is_included() {
        // Rectangle whose right edge passes exactly through the centers of
        // the middle column of a 3x1 grid.
        let g = GridGeometry::new(3, 1, 0.0, 0.0, 1.0).unwrap();
        let mask = rasterize_region(&rect(0.0, 0.0, 1.5, 1.0), &g).unwrap();
        assert!(mask.included(0));
        assert!(mask.included(1)); // center (1.5, 0.5) on the edge
        assert!(!mask.included(2));
    }

    #[test]
    fn degenerate_polygons_are_rejected() {
        let g = unit_geometry(2);
        let two = vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)];
        assert!(matches!(
            rasterize_region(&two, &g),
            Err(Error::DegeneratePolygon { .. })
        ));
        let collinear = vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        assert!(matches!(
            rasterize_region(&collinear, &g),
            Err(Error::DegeneratePolygon { .. })
        ));
    }

    #[test]
    fn polygon_missing_every_center_gives_empty_region() {
        // Tiny triangle in a cell corner, away from any center.
        let g = unit_geometry(2);
        let sliver = vec![
            Point::new(0.0, 0.0),
            Point::new(0.1, 0.0),
            Point::new(0.0, 0.1),
        ];
        assert!(matches!(
            rasterize_region(&sliver, &g),
            Err(Error::EmptyRegion)
        ));
    }

    #[test]
    fn even_odd_rule_excludes_holes() {
        // Self-overlapping square ring: outer 4x4, inner 2x2 retraced in the
        // same winding; even-odd counts the inner square as outside.
        let poly = vec![
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(4.0, 4.0),
            Point::new(0.0, 4.0),
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(3.0, 1.0),
            Point::new(3.0, 3.0),
            Point::new(1.0, 3.0),
            Point::new(1.0, 1.0),
        ];
        assert!(!even_odd_inside(Point::new(2.0, 2.0), &poly));
        assert!(even_odd_inside(Point::new(0.5, 0.5), &poly));
    }

    #[test]
    fn matches_brute_force_crossing_test_on_random_polygons() {
        // Independent check: a literal segment-by-segment ray crossing count,
        // written separately from the production routine.
        fn crossings(p: Point, poly: &[Point]) -> usize {
            let n = poly.len();
            let mut count = 0;
            for i in 0..n {
                let a = poly[i];
                let b = poly[(i + 1) % n];
                let (lo, hi) = if a.y <= b.y { (a, b) } else { (b, a) };
                if p.y >= lo.y && p.y < hi.y && lo.y != hi.y {
                    let t = (p.y - lo.y) / (hi.y - lo.y);
                    let x = lo.x + t * (hi.x - lo.x);
                    if x > p.x {
                        count += 1;
                    }
                }
            }
            count
        }

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        let g = unit_geometry(8);
        for _ in 0..20 {
            let k = rng.random_range(3..=12);
            let poly: Vec<Point> = (0..k)
                .map(|_| Point::new(rng.random_range(-1.0..9.0), rng.random_range(-1.0..9.0)))
                .collect();
            if shoelace_area(&poly) == 0.0 {
                continue;
            }
            for i in 0..g.ncells() {
                let c = g.cell_center(i);
                if on_boundary(c, &poly) {
                    continue; // tie-handling is the production routine's extension
                }
                assert_eq!(
                    even_odd_inside(c, &poly),
                    crossings(c, &poly) % 2 == 1,
                    "disagreement at {c:?} for polygon {poly:?}"
                );
            }
        }
    }

    #[test]
    fn exclude_nodata_shrinks_region() {
        let g = unit_geometry(2);
        let raster =
            CovariateRaster::new(g, vec![1.0, f64::NAN, 2.0, 3.0], -9999.0).unwrap();
        let mask = RegionMask::full(g).exclude_nodata(&raster).unwrap();
        assert_eq!(mask.included_count(), 3);
        assert!(!mask.included(1));
    }

    #[test]
    fn region_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("region.json");
        let poly = rect(0.0, 0.0, 3.5, 2.25);
        write_region(&path, &poly).unwrap();
        let back = load_region(&path).unwrap();
        assert_eq!(poly, back);
    }
}
