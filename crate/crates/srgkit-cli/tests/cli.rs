use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn srgkit(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srgkit")).env("SRGKIT_OUT_DIR", out).args(args).output().expect("run srgkit")
}

/// The single run directory created under `out`.
fn run_dir(out: &Path) -> std::path::PathBuf {
    let mut dirs: Vec<_> = std::fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    dirs.pop().expect("a run directory")
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn close(x: f64, want: f64, rel: f64) -> bool {
    (x - want).abs() <= rel * want.abs()
}

#[test]
fn pitfall_has_no_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let out = srgkit(tmp.path(), &["analyze", "--example", "pitfall"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = run_dir(tmp.path());
    let rep = report(&dir, "report.json");
    assert_eq!(rep["verdict"], "NO_BOUND");
    assert!(rep["interconnection"]["bound"]["rmin"].is_null());
    let manifest = report(&dir, "manifest.json");
    assert_eq!(manifest["exit_code"], 2);
    assert!(manifest["files"].as_array().unwrap().iter().any(|f| f == "report.json"));
}

#[test]
fn duffing_margin() {
    let tmp = tempfile::tempdir().unwrap();
    let out = srgkit(tmp.path(), &["analyze", "--example", "duffing"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&run_dir(tmp.path()), "report.json");
    let r_m = rep["analyses"][0]["r_m"].as_f64().unwrap();
    assert!(close(r_m, 4.0, 0.05), "{r_m}");
    assert_eq!(rep["verdict"], "STABLE_BOUNDED");
}

#[test]
fn pendulum_margins() {
    // Faithful composition of the N = 10 controllers gives 0.210 and 0.637;
    // the reference values 0.19 and 0.81 are discussed in the README.
    for (ex, want) in [("pendulum_k1", 0.2101), ("pendulum_k2", 0.6374)] {
        let tmp = tempfile::tempdir().unwrap();
        let out = srgkit(tmp.path(), &["analyze", "--example", ex]);
        assert_eq!(out.status.code(), Some(0), "{ex}");
        let rep = report(&run_dir(tmp.path()), "report.json");
        let r_m = rep["analyses"][0]["r_m"].as_f64().unwrap();
        assert!(close(r_m, want, 0.02), "{ex}: {r_m}");
        let bound = rep["analyses"][0]["gain_bound"].as_f64().unwrap();
        assert!(close(bound, 1.0 / want, 0.02));
        // The plain feedback condition finds no separation.
        assert_eq!(rep["analyses"][1]["verdict"], "NO_BOUND");
        assert!(rep["analyses"][1]["r_m"].as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn saturation_word_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let out = srgkit(tmp.path(), &["analyze", "--example", "lure_saturation", "--mode", "non-incremental"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&run_dir(tmp.path()), "report.json");
    assert_eq!(rep["mode"], "non-incremental");
    let rmin = rep["interconnection"]["bound"]["rmin"].as_f64().unwrap();
    assert!(close(rmin, 4.81, 0.02), "{rmin}");
    assert_eq!(rep["interconnection"]["linearization"]["stable"], true);
}

#[test]
fn reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for _ in 0..2 {
        srgkit(tmp.path(), &["analyze", "--example", "duffing_sqrt2"]);
    }
    let mut dirs: Vec<_> = std::fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    assert_eq!(dirs.len(), 2);
    let read = |d: &Path| std::fs::read(d.join("report.json")).unwrap();
    assert_eq!(read(&dirs[0]), read(&dirs[1]));
}

#[test]
fn config_errors_are_located() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"operators\": {},\n  \"wrod\": \"G\"\n}\n").unwrap();
    let out = srgkit(&tmp.path().join("out"), &["analyze", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");

    std::fs::write(&cfg, r#"{"operators": {"G": {"tf": "1/(s+1)"}}, "word": "G + H"}"#).unwrap();
    let out = srgkit(&tmp.path().join("out"), &["analyze", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains('H'));
}

#[test]
fn user_config_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("loop.json");
    std::fs::write(
        &cfg,
        r#"{
  "operators": {"G": {"tf": "1/(s+1)"}, "phi": {"nonlinearity": {"map": {"kind": "saturation"}}}},
  "word": "(G^-1 + phi)^-1",
  "analyses": [{"kind": "lure", "g": "G", "phi": "phi"}],
  "outputs": {"report": "out.json", "plots": false}
}"#,
    )
    .unwrap();
    let out = srgkit(&tmp.path().join("runs"), &["analyze", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = run_dir(&tmp.path().join("runs"));
    let rep = report(&dir, "out.json");
    // The lure margin and the word bound describe the same loop.
    let r_m = rep["analyses"][0]["r_m"].as_f64().unwrap();
    let rmin = rep["interconnection"]["bound"]["rmin"].as_f64().unwrap();
    assert!(close(1.0 / r_m, rmin, 0.02), "{r_m} {rmin}");
    assert!(!dir.join("analysis-0-lure.svg").exists());
}

#[test]
fn other_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let out = srgkit(tmp.path(), &["nyquist", "--tf", "-2/(s^2+s+1)"]);
    assert_eq!(out.status.code(), Some(2));
    let crit = report(&run_dir(tmp.path()), "criterion.json");
    assert_eq!((crit["n_p"].as_i64(), crit["n_n"].as_i64(), crit["n_z"].as_i64()), (Some(0), Some(1), Some(1)));

    let tmp = tempfile::tempdir().unwrap();
    let out = srgkit(tmp.path(), &["srg", "--example", "pitfall", "--plain"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&run_dir(tmp.path()), "region.json")["radius"].as_f64().unwrap();
    assert!(close(r, 2.0, 0.02), "{r}");

    let tmp = tempfile::tempdir().unwrap();
    let out = srgkit(tmp.path(), &["duffing-bound"]);
    assert_eq!(out.status.code(), Some(0));
    let b = report(&run_dir(tmp.path()), "result.json")["amplitude_bound"].as_f64().unwrap();
    assert!(close(b, 0.25, 0.05), "{b}");

    let tmp = tempfile::tempdir().unwrap();
    let out = srgkit(tmp.path(), &["circle", "--tf", "1/(s+1)", "--k1", "0", "--k2", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let c = report(&run_dir(tmp.path()), "circle.json");
    assert_eq!(c["classical"]["stable"], true);
    assert_eq!(c["generalized"]["verdict"], "STABLE_BOUNDED");

    let tmp = tempfile::tempdir().unwrap();
    let out = srgkit(tmp.path(), &["simulate", "--example", "duffing"]);
    assert_eq!(out.status.code(), Some(0));
    let dir = run_dir(tmp.path());
    let s = report(&dir, "summary.json");
    let y20 = s["probes"][1]["y"].as_f64().unwrap();
    assert!(y20.abs() <= 0.25 * 1.05, "{y20}");
    let csv = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,d,e,r,u,y\n"));

    let out = srgkit(tmp.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}
