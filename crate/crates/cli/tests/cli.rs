//! Behavior tests for the `gridtally` binary: exit codes, file outputs,
//! and configuration precedence.

use std::path::Path;
use std::process::{Command, Output};

use gridtally::{load_world, IsotonicModel};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gridtally"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn gridtally")
}

fn path_str(path: &Path) -> String {
    path.to_str().expect("utf8 path").to_string()
}

fn make_world(dir: &Path, extra: &[&str]) -> String {
    let world = path_str(&dir.join("world"));
    let mut args = vec![
        "generate", "--out", &world, "--ncols", "20", "--nrows", "20", "--seed", "4",
    ];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert!(out.status.success(), "generate: {}", String::from_utf8_lossy(&out.stderr));
    world
}

#[test]
fn generate_writes_a_loadable_world() {
    let dir = tempfile::tempdir().unwrap();
    let world = make_world(dir.path(), &[]);
    for file in ["covariate.asc", "counts.csv", "region.json", "metadata.json"] {
        assert!(Path::new(&world).join(file).is_file(), "{file} missing");
    }
    let loaded = load_world(&world).expect("reload");
    assert_eq!(loaded.raster().geometry().ncols, 20);

    // Refuses to clobber without --force, then overwrites with it.
    let out = run(&["generate", "--out", &world, "--seed", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["generate", "--out", &world, "--ncols", "20", "--nrows", "20", "--seed", "5", "--force"]);
    assert!(out.status.success());
}

#[test]
fn estimate_report_has_the_advertised_shape() {
    let dir = tempfile::tempdir().unwrap();
    let world = make_world(dir.path(), &[]);
    let out = run(&["estimate", "--world", &world, "--budget", "80", "--seed", "3"]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is a JSON report");
    assert_eq!(report["schema"], "1");
    assert_eq!(report["command"], "estimate");
    assert_eq!(report["method"], "identity");
    assert_eq!(report["n"], 80);
    assert!(report["estimate"].is_f64());
    assert!(report["bounds"]["kl"].is_f64());
    assert!(report["bounds"]["markov"].is_f64());

    // Stated percent error must be recomputable from the stated numbers.
    let truth = report["truth"].as_u64().unwrap() as f64;
    let estimate = report["estimate"].as_f64().unwrap();
    let stated = report["percent_error"].as_f64().unwrap();
    assert_eq!(stated, (estimate - truth).abs() / truth * 100.0);
}

#[test]
fn training_budget_is_deducted_only_for_the_plain_fitted_method() {
    let dir = tempfile::tempdir().unwrap();
    let world = make_world(dir.path(), &[]);
    let report = |method: &str| -> serde_json::Value {
        let out = run(&["estimate", "--world", &world, "--method", method, "--budget", "100", "--seed", "3"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice(&out.stdout).unwrap()
    };
    let plain = report("isotonic");
    assert_eq!(plain["budget"]["train_n"], 20);
    assert_eq!(plain["budget"]["sampling_n"], 80);
    assert_eq!(plain["budget"]["deduct_training"], true);

    let starred = report("isotonic-star");
    assert_eq!(starred["budget"]["train_n"], 20);
    assert_eq!(starred["budget"]["sampling_n"], 100);
    assert_eq!(starred["budget"]["deduct_training"], false);

    // The parameter-free transform needs no training at all.
    let out = run(&["estimate", "--world", &world, "--method", "isotonic", "--transform", "log1p", "--budget", "100", "--seed", "3"]);
    let log1p: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(log1p["budget"]["train_n"], 0);
    assert_eq!(log1p["budget"]["sampling_n"], 100);
    assert_eq!(log1p["transform"], "log1p");
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let world = make_world(dir.path(), &[]);
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"budget": 60, "seed": 8, "method": "uniform"}"#).unwrap();
    let config = path_str(&config);

    let from_file = run(&["estimate", "--world", &world, "--config", &config]);
    let report: serde_json::Value = serde_json::from_slice(&from_file.stdout).unwrap();
    assert_eq!(report["method"], "uniform");
    assert_eq!(report["n"], 60);
    assert_eq!(report["seed"], 8);

    let overridden = run(&["estimate", "--world", &world, "--config", &config, "--method", "identity"]);
    let report: serde_json::Value = serde_json::from_slice(&overridden.stdout).unwrap();
    assert_eq!(report["method"], "identity");
    assert_eq!(report["n"], 60);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"budgett": 60}"#).unwrap();
    let out = run(&["estimate", "--world", &world, "--config", &path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2), "unknown config keys are fatal");
}

#[test]
fn fit_writes_a_valid_model_either_way() {
    let dir = tempfile::tempdir().unwrap();
    let world = make_world(dir.path(), &[]);
    let model_path = path_str(&dir.path().join("model.json"));
    let samples_path = path_str(&dir.path().join("train.csv"));
    let out = run(&[
        "fit", "--world", &world, "--out", &model_path, "--train-n", "80", "--seed", "2",
        "--dump-samples", &samples_path,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model = IsotonicModel::load(&model_path).expect("valid model");
    assert!(!model.levels().is_empty());

    // Refitting from the dumped samples reproduces the model bit for bit.
    let refit_path = path_str(&dir.path().join("model2.json"));
    let out = run(&["fit", "--samples", &samples_path, "--tile-size", "1", "--out", &refit_path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(&model_path).unwrap(),
        std::fs::read(&refit_path).unwrap()
    );

    // The CSV route insists on a tile size.
    let out = run(&["fit", "--samples", &samples_path, "--out", &refit_path]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_writes_rows_for_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let world = make_world(dir.path(), &[]);
    let csv_path = path_str(&dir.path().join("rows.csv"));
    let out = run(&[
        "compare", "--world", &world, "--methods", "uniform,identity", "--budgets", "30,60",
        "--reps", "3", "--seed", "1", "--out-csv", &csv_path,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 4);

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,budget,reps,mean_estimate,mean_percent_error,std_percent_error,stderr_percent_error,degenerate_std"
    );
    assert_eq!(lines.count(), 4);

    // A single replicate flags its spread columns as degenerate.
    let out = run(&[
        "compare", "--world", &world, "--methods", "uniform", "--budgets", "30", "--reps", "1",
        "--seed", "1",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rows"][0]["degenerate_std"], true);
    assert_eq!(report["rows"][0]["std_percent_error"], 0.0);
}

#[test]
fn cost_prints_the_table_and_matches_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = path_str(&dir.path().join("cost.json"));
    let out = run(&["cost", "--area", "582650", "--percent", "0.01", "--out", &json_path]);
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("images, exhaustive"));
    assert!(table.contains("15805393"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["images_total"], 15_805_393);
    assert_eq!(report["command"], "cost");

    // Both knobs are required.
    let out = run(&["cost", "--area", "582650"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_soundness_violations_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    // All-zero world: deterministic counts, everything zeroed by sparsity,
    // so the covariate itself collapses to zero and grants no support.
    let world = make_world(dir.path(), &["--sparsity", "1", "--deterministic"]);
    let out = run(&["estimate", "--world", &world, "--method", "identity", "--epsilon", "0"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    // Plain input mistakes stay on exit 2.
    let out = run(&["estimate", "--world", "/nonexistent/world"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["estimate", "--world", &world, "--budget", "0"]);
    assert_eq!(out.status.code(), Some(2));
}
