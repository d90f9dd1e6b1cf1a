use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use splitree::commands::simulate_snapshots;
use splitree::output::{family_rows, read_family_rows};
use splitree::RunConfig;

fn splitree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn params_default_model() {
    let v = stdout_json(&splitree(&["params"]));
    for (k, want) in [("eta", 1.0), ("c", 0.5), ("m", 2.0), ("p_ext", 0.5)] {
        assert!(
            (v[k].as_f64().unwrap() - want).abs() < 1e-10,
            "{k}: {}",
            v[k]
        );
    }
}

#[test]
fn params_immortal_individuals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"birth_rate": 1, "lifespan": {"family": "dirac_infinite"}}}"#,
    );
    let v = stdout_json(&splitree(&["params", "--config", &cfg]));
    assert_eq!(v["eta"], 1.0);
    assert_eq!(v["c"], 1.0);
    assert_eq!(v["p_ext"], 0.0);
    assert!(v["m"].is_null());
}

#[test]
fn params_subcritical_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"birth_rate": 1, "lifespan": {"family": "exponential", "rate": 2}}}"#,
    );
    let out = splitree(&["params", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("subcritical"));
}

#[test]
fn scale_csv() {
    let out = splitree(&["scale", "--t", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,W,Wprime,exp_scaled"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows[0], vec![0.0, 1.0, 2.0, 1.0]);
    let last = rows.last().unwrap();
    assert!((last[0] - 1.0).abs() < 1e-12);
    let w = 2.0 * 1f64.exp() - 1.0;
    assert!((last[1] - w).abs() < 1e-4 * w);
    assert!((last[3] - w / 1f64.exp()).abs() < 1e-4);
}

#[test]
fn simulate_csv_round_trips_and_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(
        dir.path(),
        r#"{"immigration": {"model": "II", "p": [0.25, 0.25], "tail_ratio": 0.5}, "run": {"replicates": 40, "t": 3.0}}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, workers) in [(&a, "1"), (&b, "4")] {
        let out = splitree(&[
            "simulate",
            "--config",
            &cfg_path,
            "--seed",
            "5",
            "--workers",
            workers,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());

    let mut cfg = RunConfig::load(Path::new(&cfg_path)).unwrap();
    cfg.run.seed = 5;
    let expected: Vec<_> = simulate_snapshots(&cfg)
        .unwrap()
        .iter()
        .enumerate()
        .flat_map(|(i, s)| family_rows(i as u64, "II", s).collect::<Vec<_>>())
        .collect();
    assert!(!expected.is_empty());
    assert_eq!(read_family_rows(bytes.as_slice()).unwrap(), expected);
    assert!(expected.iter().any(|r| r.type_label == "tail"));
}

#[test]
fn validate_scale_report_shape() {
    let out = splitree(&["validate", "--suite", "scale"]);
    let v = stdout_json(&out);
    let arr = v.as_array().unwrap();
    assert!(!arr.is_empty());
    for r in arr {
        assert_eq!(r.as_object().unwrap().len(), 6);
        assert_eq!(r["passed"], true);
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let first = &text[..text.find('}').unwrap()];
    let pos: Vec<usize> = [
        "\"name\"",
        "\"statistic\"",
        "\"p_value\"",
        "\"n\"",
        "\"passed\"",
        "\"level\"",
    ]
    .iter()
    .map(|k| first.find(k).unwrap())
    .collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn validate_rejects_unknown_suite_and_zero_theta() {
    let out = splitree(&["validate", "--suite", "everything"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"immigration": {"theta": 0}}"#);
    let out = splitree(&["validate", "--suite", "gem", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));
}

#[test]
fn estimate_from_simulated_families() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("families.csv");
    let out = splitree(&[
        "simulate",
        "--replicates",
        "300",
        "--t",
        "8",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = stdout_json(&splitree(&["estimate", "--input", csv.to_str().unwrap()]));
    // theta / b = 1 under the default configuration.
    let alpha = v["alpha"].as_f64().unwrap();
    assert!((alpha - 1.0).abs() < 0.15, "{v}");
    assert!(v["ci_low"].as_f64().unwrap() < alpha && alpha < v["ci_high"].as_f64().unwrap());
    assert_eq!(v["replicates"], 300);

    let dir2 = tempfile::tempdir().unwrap();
    let cfg = write_config(dir2.path(), r#"{"immigration": {"model": "II"}}"#);
    let csv2 = dir2.path().join("typed.csv");
    assert!(splitree(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        csv2.to_str().unwrap()
    ])
    .status
    .success());
    let out = splitree(&["estimate", "--input", csv2.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reseed_reports_its_seed() {
    let out = splitree(&["simulate", "--replicates", "2", "--t", "0.5", "--reseed"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("seed: "));
}
