//! End-to-end runs of the `swcodes` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use swcodes::degree::{build_capacity_ensemble, EnsembleSpec};
use swcodes::stagger::stagger_region_bounds;
use swcodes_cli::io::{self, ACPR_HEADER, HISTORY_HEADER, REGION_HEADER, STAGGER_HEADER};
use swcodes_cli::{SimulationOutput, ThresholdOutput};

fn swcodes(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swcodes")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = swcodes(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn ensemble_file(dir: &Path) {
    ok(dir, &["ensemble", "--p", "0.5", "--eps", "0.4", "--mu", "0.1", "--N", "100", "--out", "ens.json"]);
}

#[test]
fn region_csv_contains_named_points_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["region", "--model", "erasure", "--p", "0.5", "--rate", "0.5", "--grid", "101", "--out", "sw.csv"]);
    let rows = io::read_csv(&dir.path().join("sw.csv"), &REGION_HEADER).unwrap();
    for pt in [[0.5, 0.75], [0.625, 0.625], [0.75, 0.5]] {
        assert!(rows.iter().any(|r| r[..] == pt), "missing {pt:?}");
    }
    let m = io::read_manifest(&dir.path().join("sw.csv")).unwrap();
    assert_eq!(m.subcommand, "region");
    assert_eq!(m.params["grid"], 101);
    assert_eq!(m.seed, 0);
}

#[test]
fn ensemble_then_threshold() {
    let dir = tempfile::tempdir().unwrap();
    ensemble_file(dir.path());
    let text = fs::read_to_string(dir.path().join("ens.json")).unwrap();
    let ens = EnsembleSpec::from_json(&text).unwrap();
    assert_eq!(ens, build_capacity_ensemble(0.5, 0.4, 0.1, 100).unwrap());

    let out = ok(dir.path(), &["threshold", "--ensemble", "ens.json"]);
    let t: ThresholdOutput = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(t.family, "ldgm");
    assert!(t.threshold >= 0.4 - 1e-4, "{t:?}");
    assert_eq!(t.target_residual, 0.01);
}

#[test]
fn zero_block_length_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    ensemble_file(dir.path());
    let out = swcodes(dir.path(), &["simulate", "--ensemble", "ens.json", "--k", "0", "--eps1", "0.3", "--eps2", "0.3", "--out", "s.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage:"));
    assert!(!dir.path().join("s.json").exists());
}

#[test]
fn argument_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["region", "--p", "1.5", "--rate", "0.5"][..],
        &["region", "--p", "0.5", "--rate", "0.5", "--bogus"],
        &["region", "--p", "nan", "--rate", "0.5"],
        &["stagger", "--rate", "0.5", "--p", "0.5", "--beta", "-0.1"],
        &["optimize", "--p", "0.5"],
        &["frobnicate"],
    ] {
        let out = swcodes(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = swcodes(dir.path(), &["threshold", "--ensemble", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    fs::write(dir.path().join("bad.json"), r#"{"lambda": [0.5, 0.2], "rho": [1.0], "p": 0.5, "eps": 0.4}"#).unwrap();
    let out = swcodes(dir.path(), &["acpr", "--ensemble", "bad.json", "--grid", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn acpr_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    ensemble_file(dir.path());
    ok(dir.path(), &["acpr", "--ensemble", "ens.json", "--grid", "11", "--out", "a.csv"]);
    ok(dir.path(), &["--threads", "2", "acpr", "--ensemble", "ens.json", "--grid", "11", "--out", "b.csv"]);
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());

    let pts = io::read_acpr(&dir.path().join("a.csv")).unwrap();
    assert_eq!(pts.len(), 11);
    assert!(pts.last().unwrap().1.is_none(), "eps1 = 1 cannot be achievable");
    let rows = io::read_csv(&dir.path().join("a.csv"), &ACPR_HEADER).unwrap();
    let mut again = Vec::new();
    io::write_csv_to(&mut again, &ACPR_HEADER, &rows).unwrap();
    assert_eq!(again, a);
}

#[test]
fn stagger_grid_matches_bounds() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["stagger", "--rate", "0.5", "--p", "0.5", "--beta", "0.5", "--blocks", "50", "--grid", "21", "--out", "st.csv"]);
    let rows = io::read_csv(&dir.path().join("st.csv"), &STAGGER_HEADER).unwrap();
    assert_eq!(rows.len(), 21 * 21);
    let m = io::read_manifest(&dir.path().join("st.csv")).unwrap();
    let (b1, b2) = stagger_region_bounds(0.5, 0.5, 0.5);
    assert_eq!(m.extra["eps1_bound"].as_f64(), Some(b1));
    assert_eq!(m.extra["eps2_bound"].as_f64(), Some(b2));
    for r in rows {
        let inside = r[0] <= b1 && r[1] <= b2;
        assert_eq!(r[2] == 1.0, inside, "{r:?}");
    }
}

#[test]
fn simulation_json_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ensemble_file(dir.path());
    let args = |seed: &'static str, out: &'static str| {
        ["simulate", "--ensemble", "ens.json", "--k", "2000", "--trials", "3", "--eps1", "0.42", "--eps2", "0.42", "--seed", seed, "--out", out]
    };
    ok(dir.path(), &args("5", "a.json"));
    ok(dir.path(), &args("5", "b.json"));
    ok(dir.path(), &args("6", "c.json"));
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_ne!(read("a.json"), read("c.json"));

    let sim: SimulationOutput = io::read_json(&dir.path().join("a.json")).unwrap();
    assert_eq!(sim.seed, 5);
    assert_eq!(sim.rng_name, "ChaCha8Rng");
    assert_eq!(sim.per_trial.len(), 3);
    assert_eq!(sim.config.k, 2000);
    let back = serde_json::to_string_pretty(&sim).unwrap() + "\n";
    assert_eq!(back.as_bytes(), &read("a.json")[..]);
}

#[test]
fn optimize_writes_ensemble_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["optimize", "--p", "0.5", "--pop", "6", "--generations", "4", "--target", "0.01", "--seed", "9"];
    ok(dir.path(), &[&args[..], &["--out", "a.json"]].concat());
    ok(dir.path(), &[&args[..], &["--out", "b.json"]].concat());
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(read("a.history.csv"), read("b.history.csv"));

    let ens = EnsembleSpec::from_json(&String::from_utf8(read("a.json")).unwrap()).unwrap();
    assert!(ens.m.is_some());
    assert_eq!(ens.rho.coefficients().len(), 3);
    let hist = io::read_csv(&dir.path().join("a.history.csv"), &HISTORY_HEADER).unwrap();
    assert_eq!(hist.len(), 5);
    assert!(hist.windows(2).all(|w| w[1][1] >= w[0][1]));
    let m = io::read_manifest(&dir.path().join("a.json")).unwrap();
    assert_eq!(m.extra["best_score"].as_f64(), Some(hist[4][1]));
}

#[test]
fn stdout_output_matches_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["region", "--model", "bsc", "--p", "0.1", "--rate", "0.7", "--grid", "11"];
    let out = ok(dir.path(), &args);
    ok(dir.path(), &[&args[..], &["--out", "r.csv"]].concat());
    assert_eq!(out.stdout, fs::read(dir.path().join("r.csv")).unwrap());
}
