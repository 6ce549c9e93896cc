//! `gridtally cost` — survey economics of sampling versus full coverage.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use gridtally::{savings_report, CostParams, CostReport};

use crate::config::{pick, pick_required, FileConfig};
use crate::failure::CliError;

#[derive(Args)]
pub struct CostArgs {
    /// Region area in square km
    #[arg(long)]
    area: Option<f64>,

    /// Percent of the region actually sampled
    #[arg(long)]
    percent: Option<f64>,

    /// JSON config supplying defaults for any omitted flag
    #[arg(long)]
    config: Option<PathBuf>,

    /// Imagery price per square km
    #[arg(long)]
    price_per_sq_km: Option<f64>,

    /// Image edge length in pixels
    #[arg(long)]
    image_pixels: Option<u32>,

    /// Ground sample distance in km per pixel
    #[arg(long)]
    gsd_km: Option<f64>,

    /// Labeling minutes per image batch
    #[arg(long)]
    minutes_per_batch: Option<f64>,

    /// Images per labeling batch
    #[arg(long)]
    images_per_batch: Option<u32>,

    /// Write the JSON report here (the table still prints)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CostFile<'a> {
    schema: &'a str,
    command: &'a str,
    #[serde(flatten)]
    report: &'a CostReport,
}

pub fn run(args: CostArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let area = pick_required(args.area, file.area, "area")?;
    let percent = pick_required(args.percent, file.percent, "percent")?;

    let defaults = CostParams::default();
    let params = CostParams {
        price_per_sq_km: pick(args.price_per_sq_km, file.price_per_sq_km, defaults.price_per_sq_km),
        image_pixels: pick(args.image_pixels, file.image_pixels, defaults.image_pixels),
        gsd_km: pick(args.gsd_km, file.gsd_km, defaults.gsd_km),
        minutes_per_batch: pick(args.minutes_per_batch, file.minutes_per_batch, defaults.minutes_per_batch),
        images_per_batch: pick(args.images_per_batch, file.images_per_batch, defaults.images_per_batch),
    };

    let report = savings_report(area, percent, &params)?;
    print!("{}", report.render_table());

    if let Some(path) = &args.out {
        let wrapped = CostFile { schema: "1", command: "cost", report: &report };
        let mut text = serde_json::to_string_pretty(&wrapped)
            .map_err(|e| CliError::input(format!("cannot encode report: {e}")))?;
        text.push('\n');
        std::fs::write(path, &text)?;
        eprintln!("report written to {}", path.display());
    }
    Ok(())
}
