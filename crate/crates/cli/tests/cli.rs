use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn floqopt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floqopt"))
        .args(args)
        .current_dir(dir)
        .env_remove("FLOQOPT_THREADS")
        .output()
        .expect("run floqopt")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn scan_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = floqopt(dir.path(), &["scan", "--grid", "2x2", "--out", "s.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert_eq!(text.lines().next(), Some("eps0,delta,probability"));
    let meta = json(&dir.path().join("s.json"));
    assert_eq!(meta["amplitude"], 6.0);
    assert_eq!(meta["drive"], serde_json::json!([1.0]));
}

#[test]
fn default_output_location() {
    let dir = tempfile::tempdir().unwrap();
    let o = floqopt(dir.path(), &["scan", "--grid", "2x2", "--drive", "triangle:3", "--amplitude", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("out/scan.csv").exists());
    assert_eq!(json(&dir.path().join("out/scan.json"))["drive"], serde_json::json!([1.0, 0.0, -1.0 / 9.0]));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"amplitude": 6, "colour": "red"}"#).unwrap();
    let cases: [&[&str]; 6] = [
        &["scan", "--grid", "2x2", "--config", "bad.json"],
        &["scan", "--grid", "2by2"],
        &["scan", "--grid", "2x2", "--amplitude", "-1"],
        &["scan", "--grid", "2x2", "--drive", "sawtooth"],
        &["scan", "--grid", "2x2", "--threads", "0"],
        &["optimize", "--population", "3", "--generations", "0"],
    ];
    for args in cases {
        let o = floqopt(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("floqopt: ") || stderr(&o).contains("error"), "{args:?}");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("scan.json"),
        r#"{"amplitude": 2.5, "grid": "3x2", "drive": "mono:0.5", "out": "from_file.csv"}"#,
    )
    .unwrap();
    let o = floqopt(dir.path(), &["scan", "--config", "scan.json", "--amplitude", "1.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = json(&dir.path().join("from_file.json"));
    assert_eq!(meta["amplitude"], 1.5);
    assert_eq!(meta["drive"], serde_json::json!([0.5]));
    assert_eq!(meta["grid"]["eps0"]["points"], 3);
    assert_eq!(meta["grid"]["delta"]["points"], 2);
}

#[test]
fn null_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = floqopt(dir.path(), &["verify", "--null", "--out", "v.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&dir.path().join("v.json"));
    assert_eq!(report["pass"], true);
    assert!(report["oracle"].is_null());
    assert!(report["null"]["max_value"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn verification_exit_code_follows_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = floqopt(dir.path(), &["verify", "--oracle", "--points", "2", "--out", "v.json"]);
    let report = json(&dir.path().join("v.json"));
    let pass = report["pass"].as_bool().unwrap();
    assert_eq!(o.status.code(), Some(if pass { 0 } else { 4 }), "{}", stderr(&o));
    assert_eq!(report["oracle"]["quasi_energies"].as_array().unwrap().len(), 2);
}

#[test]
fn spectrum_of_zero_map_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("eps0,delta,probability\n");
    for delta in [0.0, 1.0, 2.0] {
        for eps0 in [4.0, 5.0] {
            csv.push_str(&format!("{eps0},{delta},0\n"));
        }
    }
    fs::write(dir.path().join("zero.csv"), csv).unwrap();
    fs::write(dir.path().join("zero.json"), r#"{"drive": [1.0], "amplitude": 9.0, "n_ph": 32}"#).unwrap();
    let o = floqopt(dir.path(), &["spectrum", "--map", "zero.csv", "--out", "spec.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("spec.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows, ["4,0", "5,0"]);
}

#[test]
fn bands_with_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "bands", "--drive", "mono", "--compare", "triangle:5", "--amplitude", "9", "--delta", "4", "--eps0-range",
        "4.8,5.2", "--eps0-points", "5", "--out", "b.csv",
    ];
    let o = floqopt(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("b.csv").exists());
    assert!(dir.path().join("b_compare.csv").exists());
    let summary = json(&dir.path().join("b_summary.json"));
    assert_eq!(summary["delta"], 4.0);
    assert!(summary["drive"]["min_gap"].as_f64().unwrap() >= 0.0);
    assert!(summary["compare"]["min_gap"].as_f64().unwrap() >= 0.0);
    assert!(summary["smaller_gap"].is_string());
}

#[test]
fn tiny_optimization_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, threads: &str| {
        let args = [
            "optimize", "--variables", "2", "--islands", "2", "--population", "5", "--generations", "1",
            "--eps0-points", "3", "--delta-points", "5", "--seed", "11", "--threads", threads, "--out", out,
        ];
        let o = floqopt(dir.path(), &args);
        assert!(o.status.success(), "{}", stderr(&o));
        json(&dir.path().join(out).join("result.json"))
    };
    let a = run("a", "1");
    let b = run("b", "2");
    assert_eq!(a["coefficients"], b["coefficients"]);
    assert_eq!(a["objective"], b["objective"]);
    let manifest = json(&dir.path().join("a/manifest.json"));
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["history"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("a/history.csv").exists());
}

#[test]
fn optimized_result_feeds_bands() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("r.json"), r#"{"coefficients": [0.66, 0.0, -0.2]}"#).unwrap();
    let args = ["bands", "--drive", "result:r.json", "--eps0-points", "3", "--out", "b.csv"];
    let o = floqopt(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&dir.path().join("b.json"))["drive"], serde_json::json!([0.66, 0.0, -0.2]));
}
