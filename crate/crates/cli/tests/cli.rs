use std::path::Path;
use std::process::{Command, Output};

fn mipt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mipt")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = mipt(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decode_generate_train_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("circuit.toml");
    std::fs::write(&cfg, "L = 8\nT = 4\np = 0.5\ncircuit_seed = 4\n").unwrap();
    let report = dir.path().join("report.json");
    ok(&["exact-decode", "--circuit", s(&cfg), "--out", s(&report)]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(["X", "Y", "Z"].contains(&v["axis"].as_str().unwrap()));
    assert!(v["c"] == 1 || v["c"] == -1);

    let ds = dir.path().join("ds.bin");
    let test = dir.path().join("test.bin");
    ok(&["generate", "--circuit", s(&cfg), "-n", "300", "--window", "lightcone", "--out", s(&ds)]);
    ok(&["generate", "--circuit", s(&cfg), "-n", "200", "--first-seed", "100000", "--window", "lightcone", "--out", s(&test)]);
    let model = dir.path().join("model.bin");
    ok(&["train", "--dataset", s(&ds), "--epochs", "5", "--batch", "32", "--seed", "1", "--out", s(&model)]);
    let ev: serde_json::Value = serde_json::from_str(&ok(&["eval", "--model", s(&model), "--dataset", s(&test)])).unwrap();
    assert_eq!(ev["n_test"], 200);
    assert_eq!(ev["epsilon"], 0.02);
}

#[test]
fn simulate_prints_one_line_per_trajectory() {
    let out = ok(&["simulate", "--L", "4", "--T", "3", "--p", "1.0", "--seed", "2", "--trajectories", "3", "--validate-tableau"]);
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["outcomes"].as_array().unwrap().len(), 3);
    let last = ok(&["simulate", "--L", "4", "--T", "3", "--p", "1.0", "--final-measurement-round", "false"]);
    let v: serde_json::Value = serde_json::from_str(last.trim()).unwrap();
    assert!(v["outcomes"][2].as_array().unwrap().iter().all(|x| x == 0));
}

#[test]
fn experiment_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hist.toml");
    std::fs::write(&cfg, "L = 8\nT = 5\np = [0.3]\nn_circuits = 100\n").unwrap();
    let out = dir.path().join("out");
    ok(&["purification-hist", "--config", s(&cfg), "--out", s(&out)]);
    let csv = std::fs::read_to_string(out.join("purification_hist.csv")).unwrap();
    assert!(csv.starts_with("L,T,p,t_p,count,r_p\n"));
    assert_eq!(csv.lines().count(), 1 + 5 + 1);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn bad_input_fails_cleanly() {
    assert!(!mipt(&["exact-decode", "--L", "8", "--out", "x.json"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "L = 8\nunknown_key = 1\n").unwrap();
    let out = mipt(&["complexity", "--config", s(&cfg), "--out", s(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown"));
}
