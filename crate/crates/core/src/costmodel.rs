//! What exhaustive coverage costs versus sampling a sliver of it:
//! imagery priced by area, labeling priced by crowdwork throughput.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit prices and imaging parameters behind the cost arithmetic. Defaults
/// reflect commercial high-resolution imagery (USD 17 per km²) labeled in
/// batches of 100 images of 640×640 px at 0.3 m per pixel, 43 minutes per
/// batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub price_per_sq_km: f64,
    pub image_pixels: u32,
    /// Ground sample distance in km per pixel.
    pub gsd_km: f64,
    pub minutes_per_batch: f64,
    pub images_per_batch: u32,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            price_per_sq_km: 17.0,
            image_pixels: 640,
            gsd_km: 0.0003,
            minutes_per_batch: 43.0,
            images_per_batch: 100,
        }
    }
}

impl CostParams {
    fn validate(&self) -> Result<()> {
        if !self.price_per_sq_km.is_finite() || self.price_per_sq_km <= 0.0 {
            return Err(Error::invalid(format!(
                "price per km² must be positive, got {}",
                self.price_per_sq_km
            )));
        }
        if self.image_pixels == 0 {
            return Err(Error::invalid("image size must be at least 1 pixel"));
        }
        if !self.gsd_km.is_finite() || self.gsd_km <= 0.0 {
            return Err(Error::invalid(format!(
                "ground sample distance must be positive, got {}",
                self.gsd_km
            )));
        }
        if !self.minutes_per_batch.is_finite() || self.minutes_per_batch <= 0.0 {
            return Err(Error::invalid(format!(
                "minutes per batch must be positive, got {}",
                self.minutes_per_batch
            )));
        }
        if self.images_per_batch == 0 {
            return Err(Error::invalid("batch size must be at least 1 image"));
        }
        Ok(())
    }

    /// Edge length (km) of the ground footprint of one image.
    pub fn image_edge_km(&self) -> f64 {
        self.image_pixels as f64 * self.gsd_km
    }
}

fn positive_area(area_sq_km: f64) -> Result<f64> {
    if !area_sq_km.is_finite() || area_sq_km <= 0.0 {
        return Err(Error::invalid(format!(
            "area must be finite and positive, got {area_sq_km} km²"
        )));
    }
    Ok(area_sq_km)
}

/// Price of imagery covering `area_sq_km`, pro-rata by area.
pub fn image_cost(area_sq_km: f64, price_per_sq_km: f64) -> Result<f64> {
    positive_area(area_sq_km)?;
    if !price_per_sq_km.is_finite() || price_per_sq_km <= 0.0 {
        return Err(Error::invalid(format!(
            "price per km² must be positive, got {price_per_sq_km}"
        )));
    }
    Ok(area_sq_km * price_per_sq_km)
}

/// Number of images needed to tile `area_sq_km`: the area divided by one
/// image footprint, rounded up. Partial coverage still needs a whole image,
/// hence the ceiling; the tiny shave guards exact multiples against
/// ceiling up on rounding noise.
pub fn images_to_cover(area_sq_km: f64, image_pixels: u32, gsd_km: f64) -> Result<u64> {
    positive_area(area_sq_km)?;
    if image_pixels == 0 || !gsd_km.is_finite() || gsd_km <= 0.0 {
        return Err(Error::invalid(format!(
            "bad image parameters: {image_pixels} px at {gsd_km} km/px"
        )));
    }
    let edge = image_pixels as f64 * gsd_km;
    let ideal = area_sq_km / (edge * edge);
    Ok((ideal * (1.0 - 1e-12)).ceil() as u64)
}

/// Hours to label `n_images` at `minutes_per_batch` per
/// `images_per_batch`-image batch, pro-rata for partial batches.
pub fn labeling_hours(n_images: u64, minutes_per_batch: f64, images_per_batch: u32) -> Result<f64> {
    if !minutes_per_batch.is_finite() || minutes_per_batch <= 0.0 || images_per_batch == 0 {
        return Err(Error::invalid(format!(
            "bad labeling parameters: {minutes_per_batch} min per {images_per_batch} images"
        )));
    }
    Ok(n_images as f64 / images_per_batch as f64 * minutes_per_batch / 60.0)
}

/// Side-by-side cost of exhaustive coverage versus sampling
/// `percent_sampled` of the area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub region_area_sq_km: f64,
    pub percent_sampled: f64,
    /// Ground footprint edge of one image (km).
    pub image_edge_km: f64,
    pub images_total: u64,
    pub images_sampled: u64,
    pub image_cost_total: f64,
    pub image_cost_sampled: f64,
    pub image_cost_saved: f64,
    pub labeling_hours_total: f64,
    pub labeling_hours_sampled: f64,
    pub labeling_hours_saved: f64,
}

/// Builds the exhaustive-versus-sampled comparison. Monetary cost scales
/// with raw area; image counts round whole images up on both sides.
pub fn savings_report(
    area_sq_km: f64,
    percent_sampled: f64,
    params: &CostParams,
) -> Result<CostReport> {
    positive_area(area_sq_km)?;
    params.validate()?;
    if !percent_sampled.is_finite() || percent_sampled <= 0.0 || percent_sampled > 100.0 {
        return Err(Error::invalid(format!(
            "sampled percentage must lie in (0, 100], got {percent_sampled}"
        )));
    }
    let fraction = percent_sampled / 100.0;
    let sampled_area = area_sq_km * fraction;

    let images_total = images_to_cover(area_sq_km, params.image_pixels, params.gsd_km)?;
    let images_sampled = images_to_cover(sampled_area, params.image_pixels, params.gsd_km)?;
    let image_cost_total = image_cost(area_sq_km, params.price_per_sq_km)?;
    let image_cost_sampled = image_cost(sampled_area, params.price_per_sq_km)?;
    let labeling_hours_total =
        labeling_hours(images_total, params.minutes_per_batch, params.images_per_batch)?;
    let labeling_hours_sampled = labeling_hours(
        images_sampled,
        params.minutes_per_batch,
        params.images_per_batch,
    )?;

    Ok(CostReport {
        region_area_sq_km: area_sq_km,
        percent_sampled,
        image_edge_km: params.image_edge_km(),
        images_total,
        images_sampled,
        image_cost_total,
        image_cost_sampled,
        image_cost_saved: image_cost_total - image_cost_sampled,
        labeling_hours_total,
        labeling_hours_sampled,
        labeling_hours_saved: labeling_hours_total - labeling_hours_sampled,
    })
}

impl CostReport {
    /// Two-column text rendering for terminals.
    pub fn render_table(&self) -> String {
        let rows: Vec<(&str, String)> = vec![
            ("region area (km²)", format!("{}", self.region_area_sq_km)),
            ("sampled share (%)", format!("{}", self.percent_sampled)),
            ("image edge (km)", format!("{}", self.image_edge_km)),
            ("images, exhaustive", format!("{}", self.images_total)),
            ("images, sampled", format!("{}", self.images_sampled)),
            ("imagery cost, exhaustive (USD)", format!("{:.2}", self.image_cost_total)),
            ("imagery cost, sampled (USD)", format!("{:.2}", self.image_cost_sampled)),
            ("imagery cost saved (USD)", format!("{:.2}", self.image_cost_saved)),
            ("labeling, exhaustive (h)", format!("{:.2}", self.labeling_hours_total)),
            ("labeling, sampled (h)", format!("{:.2}", self.labeling_hours_sampled)),
            ("labeling saved (h)", format!("{:.2}", self.labeling_hours_saved)),
        ];
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<width$}  {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const US_AREA: f64 = 9_629_091.0;
    const KENYA_AREA: f64 = 582_650.0;

    #[test]
    fn imagery_cost_of_the_united_states() {
        assert_eq!(image_cost(US_AREA, 17.0).unwrap(), 163_694_547.0);
    }

    #[test]
    fn image_counts_for_reference_regions() {
        // 640 px at 0.3 m/px is a 0.192 km edge, 0.036864 km² per image.
        assert_eq!(
            images_to_cover(KENYA_AREA, 640, 0.0003).unwrap(),
            15_805_393
        );
        // One image footprint exactly, and just over it.
        assert_eq!(images_to_cover(0.036864, 640, 0.0003).unwrap(), 1);
        assert_eq!(images_to_cover(0.073728, 640, 0.0003).unwrap(), 2);
        assert_eq!(images_to_cover(0.037, 640, 0.0003).unwrap(), 2);
    }

    #[test]
    fn us_image_count_is_the_exact_ceiling() {
        // 9,629,091 / 0.036864 = 261,205,810.546875 exactly, so whole-image
        // coverage needs 261,205,811.
        let n = images_to_cover(US_AREA, 640, 0.0003).unwrap();
        assert_eq!(n, 261_205_811);
        // Round-trip bracket: n images cover the area, n − 1 do not.
        let per_image = 0.192 * 0.192;
        assert!(n as f64 * per_image >= US_AREA);
        assert!((n - 1) as f64 * per_image < US_AREA);
    }

    #[test]
    fn labeling_hours_scale_with_batches() {
        // 261,205,810 images in batches of 100 at 43 min each.
        let h = labeling_hours(261_205_810, 43.0, 100).unwrap();
        assert_relative_eq!(h, 261_205_810.0 / 100.0 * 43.0 / 60.0, max_relative = 1e-12);
        assert_relative_eq!(h, 1_871_974.97, max_relative = 1e-7);
        assert_eq!(labeling_hours(0, 43.0, 100).unwrap(), 0.0);
        // Partial batches are pro-rata: 50 images is half a batch.
        assert_relative_eq!(labeling_hours(50, 60.0, 100).unwrap(), 0.5);
    }

    #[test]
    fn us_savings_at_a_thousandth_of_a_percent() {
        let report = savings_report(US_AREA, 0.001, &CostParams::default()).unwrap();
        assert_eq!(report.image_cost_total, 163_694_547.0);
        assert_relative_eq!(report.image_cost_saved, 163_692_910.05, max_relative = 1e-6);
        assert_relative_eq!(
            report.labeling_hours_saved,
            1_871_956.0,
            max_relative = 1e-4
        );
        assert!(report.images_sampled >= 1);
        assert!(report.image_cost_sampled < 2_000.0);
    }

    #[test]
    fn savings_round_trip_from_a_published_figure() {
        // Back-computed area from a 2% survey saving 2,459,183 USD:
        // area = saved / (price · 0.98) ≈ 147,610 km². Feeding that area
        // forward must reproduce the saving.
        let area = 2_459_183.0 / (17.0 * 0.98);
        assert_relative_eq!(area, 147_610.0, max_relative = 1e-6);
        let report = savings_report(area, 2.0, &CostParams::default()).unwrap();
        assert_relative_eq!(report.image_cost_saved, 2_459_183.0, max_relative = 1e-9);
    }

    #[test]
    fn sampled_never_exceeds_total() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let params = CostParams::default();
        for _ in 0..100 {
            let area = rng.random_range(0.1..1e7);
            let pct = rng.random_range(1e-4..100.0);
            let r = savings_report(area, pct, &params).unwrap();
            assert!(r.images_sampled <= r.images_total);
            assert!(r.image_cost_sampled <= r.image_cost_total);
            assert!(r.labeling_hours_sampled <= r.labeling_hours_total);
            assert!(r.image_cost_saved >= 0.0);
            assert!(r.labeling_hours_saved >= 0.0);
        }
    }

    #[test]
    fn full_coverage_saves_nothing() {
        let r = savings_report(1000.0, 100.0, &CostParams::default()).unwrap();
        assert_eq!(r.images_sampled, r.images_total);
        assert_relative_eq!(r.image_cost_saved, 0.0);
        assert_relative_eq!(r.labeling_hours_saved, 0.0);
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        let params = CostParams::default();
        assert!(savings_report(0.0, 1.0, &params).is_err());
        assert!(savings_report(-10.0, 1.0, &params).is_err());
        assert!(savings_report(100.0, 0.0, &params).is_err());
        assert!(savings_report(100.0, 100.1, &params).is_err());
        assert!(image_cost(100.0, 0.0).is_err());
        assert!(images_to_cover(100.0, 0, 0.0003).is_err());
        assert!(labeling_hours(10, 0.0, 100).is_err());
    }

    #[test]
    fn table_lists_every_figure() {
        let r = savings_report(US_AREA, 0.001, &CostParams::default()).unwrap();
        let table = r.render_table();
        assert!(table.contains("163694547.00"));
        assert!(table.contains("261205811"));
        assert_eq!(table.lines().count(), 11);
    }
}
