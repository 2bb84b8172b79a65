use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dimwit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dimwit"))
        .args(args)
        .current_dir(dir)
        .env_remove("DIMWIT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eval_prints_the_triangle_value() {
    let dir = tempfile::tempdir().unwrap();
    assert!(dimwit(&["registry", "build", "qubit_triangle_k2", "--out", "tri.json"], dir.path()).status.success());
    let o = dimwit(&["eval", "--scenario", "tri.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("|W_k| = 0.649519"));
}

#[test]
fn eval_record_embeds_the_scenario_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    dimwit(&["registry", "build", "d5_k7_heptagonal", "--out", "h.json"], dir.path());
    let o = dimwit(&["eval", "--scenario", "h.json", "--out", "rec.json", "--csv", "p.csv"], dir.path());
    assert!(o.status.success());
    let rec = read_json(&dir.path().join("rec.json"));
    assert_eq!(rec["config"]["scenario"], read_json(&dir.path().join("h.json")));
    assert_eq!(rec["library_version"], env!("CARGO_PKG_VERSION"));
    let again = dimwit(&["eval", "--matrix", "p.csv"], dir.path());
    assert!(stdout(&again).contains("|W_k| = 3.72333893952"));
}

#[test]
fn classical_exhaustive_k3() {
    let dir = tempfile::tempdir().unwrap();
    let o = dimwit(&["classical-max", "--k", "3", "--exhaustive"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("max |W_k| = 2"));
    // three measured rows plus the ones row
    assert_eq!(out.lines().filter(|l| l.starts_with("  ")).count(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dimwit(&["eval", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(dimwit(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(dimwit(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(dimwit(&["registry", "verify", "nope"], dir.path()).status.code(), Some(1));
    assert_eq!(dimwit(&["eval", "--scenario", "missing.json"], dir.path()).status.code(), Some(1));
    std::fs::write(dir.path().join("bad.json"), "{\"dim\": 2}").unwrap();
    assert_eq!(dimwit(&["eval", "--scenario", "bad.json"], dir.path()).status.code(), Some(1));
    assert_eq!(dimwit(&["--jobs", "0", "registry", "list"], dir.path()).status.code(), Some(1));
}

#[test]
fn tampered_record_fails_replay_with_numeric_status() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["optimize", "--dim", "2", "--k", "2", "--field", "real", "--restarts", "1", "--sweeps", "20", "--out", "o.json"];
    assert!(dimwit(&args, dir.path()).status.success());
    assert_eq!(dimwit(&["replay", "o.json"], dir.path()).status.code(), Some(0));
    let path = dir.path().join("o.json");
    let mut rec = read_json(&path);
    rec["result"]["value"] = Value::from(0.5);
    std::fs::write(&path, serde_json::to_string_pretty(&rec).unwrap()).unwrap();
    let o = dimwit(&["replay", "o.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("value"));
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dimwit"))
        .args(["optimize", "--dim", "2", "--k", "2", "--restarts", "1", "--sweeps", "10", "--out", "o.json"])
        .current_dir(dir.path())
        .env("DIMWIT_SEED", "41")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(read_json(&dir.path().join("o.json"))["config"]["schedule"]["seed"], 41);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["optimize", "--dim", "3", "--k", "3", "--field", "real", "--restarts", "3", "--sweeps", "20"];
    let mut a: Vec<&str> = vec!["--jobs", "1"];
    a.extend(base);
    a.extend(["--out", "a.json"]);
    let mut b: Vec<&str> = vec!["--jobs", "3"];
    b.extend(base);
    b.extend(["--out", "b.json"]);
    assert!(dimwit(&a, dir.path()).status.success());
    assert!(dimwit(&b, dir.path()).status.success());
    let ra = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(ra, std::fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn simulate_then_detect() {
    let dir = tempfile::tempdir().unwrap();
    dimwit(&["registry", "build", "qubit_axes_test_k4", "--out", "axes.json"], dir.path());
    let o = dimwit(
        &["simulate", "--scenario", "axes.json", "--shots", "10000", "--trials", "50", "--seed", "9", "--out", "runs.csv", "--counts-out", "c.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 51);
    assert!(runs.starts_with("trial,witness_hat\n"));
    let rec = read_json(&dir.path().join("runs.json"));
    assert_eq!(rec["config"]["command"], "simulate");
    let first: f64 = runs.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(rec["result"]["witness_hats"][0].as_f64().unwrap(), first);

    let o = dimwit(&["detect", "--scenario", "axes.json", "--counts", "c.csv", "--out", "rep.json"], dir.path());
    assert!(o.status.success());
    let rep = read_json(&dir.path().join("rep.json"));
    assert_eq!(rep["witness_hat"].as_f64().unwrap(), first);
    assert_eq!(rep["verdict"], "CONSISTENT");
    assert!((rep["variance"].as_f64().unwrap() - 1.0 / 160_000.0).abs() < 1e-18);
    assert_eq!(dimwit(&["replay", "runs.json"], dir.path()).status.code(), Some(0));
}

#[test]
fn detect_rejects_counts_for_the_wrong_k() {
    let dir = tempfile::tempdir().unwrap();
    dimwit(&["registry", "build", "qubit_axes_test_k4", "--out", "axes.json"], dir.path());
    std::fs::write(dir.path().join("c.csv"), "i,j,n_ij,n\n0,0,3,10\n0,1,7,10\n").unwrap();
    assert_eq!(dimwit(&["detect", "--scenario", "axes.json", "--counts", "c.csv"], dir.path()).status.code(), Some(1));
}

#[test]
fn report_traces_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    dimwit(&["registry", "build", "qubit_triangle_k2", "--out", "tri.json"], dir.path());
    dimwit(&["eval", "--scenario", "tri.json", "--out", "ev.json"], dir.path());
    let opt = ["optimize", "--dim", "2", "--k", "2", "--field", "real", "--restarts", "1", "--sweeps", "20", "--out", "opt.json"];
    dimwit(&opt, dir.path());
    let o = dimwit(&["report", "opt.json", "ev.json", "--csv-dir", "traces"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    let header = out.lines().next().unwrap();
    assert!(header.contains("opt.json") && header.contains("ev.json"));
    assert!(out.lines().any(|l| l.starts_with("command") && l.contains("optimize") && l.contains("eval")));
    let ev = std::fs::read_to_string(dir.path().join("traces/ev.trace.csv")).unwrap();
    assert_eq!(ev, "stage,best_value\n");
    let tr = std::fs::read_to_string(dir.path().join("traces/opt.trace.csv")).unwrap();
    assert_eq!(tr.lines().count(), 1 + 12);
    assert_eq!(dimwit(&["report", "tri.json"], dir.path()).status.code(), Some(1));
}

#[test]
fn registry_listing_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let o = dimwit(&["registry", "list", "--json"], dir.path());
    let list: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(list.as_array().unwrap().len(), 19);
    assert!(dimwit(&["registry", "export", "--out", "cat.json"], dir.path()).status.success());
    let cat = read_json(&dir.path().join("cat.json"));
    assert_eq!(cat["entries"].as_array().unwrap().len(), 19);
    let o = dimwit(&["registry", "verify", "d5_k7_heptagonal"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("probability_table"));
}
