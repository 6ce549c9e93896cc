//! `gridtally compare` — sweep methods × budgets over repeated runs.
//!
//! Replicates run in parallel but every replicate owns an independent seed
//! substream derived from its (method, budget, rep) coordinates, and rows
//! are reduced in coordinate order — so reports are byte-identical across
//! worker counts and repeated invocations.

use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use gridtally::{percent_error, substream_seed};

use crate::config::{pick, FileConfig};
use crate::engine::{run_one, Method, RunSpec, TransformKind};
use crate::failure::CliError;

#[derive(Args)]
pub struct CompareArgs {
    /// World directory to estimate
    #[arg(long)]
    world: PathBuf,

    /// JSON config supplying defaults for any omitted flag
    #[arg(long)]
    config: Option<PathBuf>,

    /// Methods to sweep
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<Method>>,

    /// Budgets to sweep
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<usize>>,

    /// Replicates per (method, budget) cell
    #[arg(long)]
    reps: Option<usize>,

    /// Fraction of the budget spent on training draws
    #[arg(long)]
    train_fraction: Option<f64>,

    /// Fraction of training tiles targeted at positive counts
    #[arg(long)]
    positive_fraction: Option<f64>,

    /// Hard cap on the training set size
    #[arg(long)]
    cap: Option<usize>,

    /// Mixture weight toward uniform in the proposal
    #[arg(long)]
    epsilon: Option<f64>,

    /// Covariate transform for the fitted methods
    #[arg(long, value_enum)]
    transform: Option<TransformKind>,

    /// Root seed for the sweep
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (0 = one per core)
    #[arg(long)]
    workers: Option<usize>,

    /// Write the JSON report here
    #[arg(long)]
    out_json: Option<PathBuf>,

    /// Write the per-row CSV here
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct CompareRow {
    method: &'static str,
    budget: usize,
    reps: usize,
    mean_estimate: f64,
    mean_percent_error: f64,
    std_percent_error: f64,
    stderr_percent_error: f64,
    /// True when a single replicate makes the spread columns meaningless.
    degenerate_std: bool,
}

#[derive(Serialize)]
struct CompareReport<'a> {
    schema: &'a str,
    command: &'a str,
    world: String,
    truth: u64,
    seed: u64,
    reps: usize,
    epsilon: f64,
    train_fraction: f64,
    transform: &'a str,
    rows: Vec<CompareRow>,
}

struct Job {
    method: Method,
    budget: usize,
    seed: u64,
}

fn aggregate(rows: &mut Vec<CompareRow>, job_grid: &[(Method, usize)], reps: usize, results: &[(f64, f64)]) {
    for (cell, &(method, budget)) in job_grid.iter().enumerate() {
        let cell_results = &results[cell * reps..(cell + 1) * reps];
        let n = reps as f64;
        let mean_estimate = cell_results.iter().map(|r| r.0).sum::<f64>() / n;
        let mean_err = cell_results.iter().map(|r| r.1).sum::<f64>() / n;
        let degenerate = reps < 2;
        let std_err = if degenerate {
            0.0
        } else {
            let ss = cell_results
                .iter()
                .map(|r| (r.1 - mean_err).powi(2))
                .sum::<f64>();
            (ss / (n - 1.0)).sqrt()
        };
        rows.push(CompareRow {
            method: method.label(),
            budget,
            reps,
            mean_estimate,
            mean_percent_error: mean_err,
            std_percent_error: std_err,
            stderr_percent_error: std_err / n.sqrt(),
            degenerate_std: degenerate,
        });
    }
}

fn write_csv(path: &Path, rows: &[CompareRow]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

pub fn run(args: CompareArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let methods = pick(
        args.methods,
        file.methods,
        vec![Method::Uniform, Method::Identity, Method::Isotonic, Method::IsotonicStar],
    );
    let budgets = pick(args.budgets, file.budgets, vec![100]);
    let reps = pick(args.reps, file.reps, 20);
    let root_seed = pick(args.seed, file.seed, 0);
    let workers = pick(args.workers, file.workers, 0);
    let train_fraction = pick(args.train_fraction, file.train_fraction, 0.2);
    let positive_fraction = pick(args.positive_fraction, file.positive_fraction, 0.5);
    let cap = pick(args.cap, file.cap, 5000);
    let epsilon = pick(args.epsilon, file.epsilon, 1e-3);
    let transform = pick(args.transform, file.transform, TransformKind::Isotonic);

    if methods.is_empty() || budgets.is_empty() || reps == 0 {
        return Err(CliError::input(
            "comparison needs at least one method, one budget, and one replicate".to_string(),
        ));
    }

    let world = gridtally::load_world(&args.world)?;
    let truth = world.total_count();
    if truth == 0 {
        return Err(CliError::input(
            "comparison needs a world holding at least one object".to_string(),
        ));
    }

    let mut job_grid = Vec::new();
    for &method in &methods {
        for &budget in &budgets {
            job_grid.push((method, budget));
        }
    }
    let jobs: Vec<Job> = job_grid
        .iter()
        .enumerate()
        .flat_map(|(cell, &(method, budget))| {
            (0..reps).map(move |rep| Job {
                method,
                budget,
                seed: substream_seed(root_seed, (cell * reps + rep) as u64),
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::input(format!("cannot start worker pool: {e}")))?;

    let run_job = |job: &Job| -> Result<(f64, f64), CliError> {
        let spec = RunSpec {
            method: job.method,
            budget: job.budget,
            train_fraction,
            positive_fraction,
            cap,
            epsilon,
            transform,
            seed: job.seed,
        };
        let outcome = run_one(&world, &spec)?;
        let pct = percent_error(outcome.estimate.estimate, truth as f64)?;
        Ok((outcome.estimate.estimate, pct))
    };
    let results: Vec<(f64, f64)> = pool
        .install(|| jobs.par_iter().map(run_job).collect::<Result<Vec<_>, _>>())?;

    let mut rows = Vec::new();
    aggregate(&mut rows, &job_grid, reps, &results);

    let report = CompareReport {
        schema: "1",
        command: "compare",
        world: args.world.display().to_string(),
        truth,
        seed: root_seed,
        reps,
        epsilon,
        train_fraction,
        transform: transform.label(),
        rows,
    };

    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::input(format!("cannot encode report: {e}")))?;
    text.push('\n');
    match &args.out_json {
        Some(path) => {
            std::fs::write(path, &text)?;
            eprintln!("report written to {}", path.display());
        }
        None => print!("{text}"),
    }
    if let Some(path) = &args.out_csv {
        write_csv(path, &report.rows)?;
        eprintln!("rows written to {}", path.display());
    }
    Ok(())
}
