//! The `bll` command line, driven in-process.

use beta_laguerre::cli::{run, EXIT_OK, EXIT_USAGE};
use beta_laguerre::output::{load_summary, CSV_FILE, CSV_HEADER, JSON_FILE};

fn bll(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("bll").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

const SMALL: &[&str] = &["--n-particles", "20", "--t-max", "0.5", "--replicas", "3", "--seed", "5"];

#[test]
fn simulate_writes_reproducible_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["simulate", "--out", out, "--format", "both"];
    args.extend_from_slice(SMALL);

    let (code, stdout, _) = bll(&args);
    assert_eq!(code, EXIT_OK, "{stdout}");
    let csv = std::fs::read(dir.path().join(CSV_FILE)).unwrap();
    let json = std::fs::read(dir.path().join(JSON_FILE)).unwrap();

    let (code, _, _) = bll(&args);
    assert_eq!(code, EXIT_OK);
    assert_eq!(csv, std::fs::read(dir.path().join(CSV_FILE)).unwrap());
    assert_eq!(json, std::fs::read(dir.path().join(JSON_FILE)).unwrap());

    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let summary = load_summary(dir.path()).unwrap();
    assert_eq!(summary.run_id.len(), 12);
    assert!(text.lines().skip(1).all(|l| l.starts_with(&summary.run_id)));
    assert_eq!(summary.spec["params"]["n_particles"], 20);

    let (code, report, _) = bll(&["report", out]);
    assert_eq!(code, EXIT_OK);
    assert!(report.contains(&summary.run_id));
    assert!(report.trim_end().ends_with(if summary.pass { "overall: PASS" } else { "overall: FAIL" }));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nn-particles = 20\nt_max = 0.5\nreplicas = 3\nseed = 5\nformat = json\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let (code, from_file, _) = bll(&["--config", cfg, "simulate"]);
    assert_eq!(code, EXIT_OK);
    let mut args = vec!["simulate", "--format", "json"];
    args.extend_from_slice(SMALL);
    let (_, from_flags, _) = bll(&args);
    assert_eq!(from_file, from_flags);

    let (_, overridden, _) = bll(&["--config", cfg, "simulate", "--seed", "6"]);
    assert_ne!(overridden, from_file);
}

#[test]
fn invalid_input_is_a_usage_error() {
    for args in [
        &["simulate", "--alpha", "0.5"][..],
        &["simulate", "--c", "-1"],
        &["limit", "--format", "yaml"],
        &["report", "/nonexistent/dir"],
        &["frobnicate"],
    ] {
        let (code, _, err) = bll(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(!err.is_empty());
    }
}

#[test]
fn limit_prints_moments_and_quadrature() {
    let (code, out, _) = bll(&["limit", "--k-max", "4"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("u_0..u_4 = 1, 2, 8, 44, 296"));
    assert!(out.contains("4-point Jacobi quadrature"));

    let (code, json, _) = bll(&["limit", "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    let weights: f64 = doc["quadrature"]["weights"].as_array().unwrap().iter().map(|w| w.as_f64().unwrap()).sum();
    assert!((weights - 1.0).abs() < 1e-12);
    assert!(doc["stieltjes"].as_array().unwrap().iter().all(|g| g["value"][1].as_f64().unwrap() > 0.0));
}

#[test]
fn moments_json_lists_exact_coefficients() {
    let (code, json, _) = bll(&["moments", "--format", "json", "--k-max", "4"]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["moments"][3]["coefficients"], serde_json::json!(["296", "-592", "256", "112", "-71"]));
}
