use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dfchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfchain")).args(args).output().expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn simulate_writes_reproducible_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "constant.json", r#"{"kind": "constant", "p": [0.3, 0.5, 0.2]}"#);
    let mut csvs = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("run{k}"));
        let o = dfchain(&[
            "simulate",
            "--spec",
            &spec,
            "--steps",
            "500",
            "--replicas",
            "2",
            "--seed",
            "7",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("replica,step,x1,x2,i,t"));
        assert_eq!(csv.lines().count(), 1 + 2 * 501);
        assert!(!csv.contains('\r'));
        assert_eq!(manifest(&out)["seed"], 7);
        csvs.push(csv);
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn invariant_compares_with_dirichlet() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "constant.json", r#"{"kind": "constant", "p": [0.3, 0.5, 0.2]}"#);
    let out = tmp.path().join("inv");
    let o = dfchain(&["invariant", "--spec", &spec, "--resolution", "32", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let m = manifest(&out);
    assert_eq!(m["results"]["status"], "converged");
    assert!(m["results"]["comparisons"]["dirichlet"]["l1"].as_f64().unwrap() < 0.05);
    let csv = fs::read_to_string(out.join("density.csv")).unwrap();
    assert!(csv.starts_with("cell_id,x1,x2,mass\n"));
    assert_eq!(csv.lines().count(), 1 + 32 * 32);
    assert!(fs::read_to_string(out.join("density.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn degenerate_invariant_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "identity.json", r#"{"kind": "affine", "theta": [0.0, 0.0, 0.0]}"#);
    let out = tmp.path().join("inv");
    let o = dfchain(&["invariant", "--spec", &spec, "--resolution", "16", "--max-iter", "50", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let m = manifest(&out);
    assert_eq!(m["results"]["status"], "degenerate");
    assert!(m["results"]["degenerate_reason"].as_str().unwrap().contains("absorbing"));
}

#[test]
fn classify_reports_three_vertices() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "absorb3.json", r#"{"kind": "programmatic", "name": "identity", "dim": 2}"#);
    let out = tmp.path().join("cls");
    let o = dfchain(&["classify", "--spec", &spec, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rep: Value = serde_json::from_str(&fs::read_to_string(out.join("classification.json")).unwrap()).unwrap();
    assert_eq!(rep["class"], "ThreeVertices");
    assert_eq!(rep["members"].as_array().unwrap().len(), 3);
    assert_eq!(rep["thresholds"]["eps_one"], 1e-9);
}

#[test]
fn classify_interior_draws_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "k0.json", r#"{"kind": "programmatic", "name": "k0-stationary", "dim": 2}"#);
    let out = tmp.path().join("cls");
    assert!(dfchain(&["classify", "--spec", &spec, "--resolution", "32", "--out", out.to_str().unwrap()]).status.success());
    let rep: Value = serde_json::from_str(&fs::read_to_string(out.join("classification.json")).unwrap()).unwrap();
    assert_eq!(rep["class"], "InteriorCompact");
    assert_eq!(rep["reached_full_simplex"], false);
    assert!(fs::read_to_string(out.join("regions.svg")).unwrap().contains("<path"));
}

#[test]
fn uniqueness_report() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "affine.json", r#"{"kind": "affine", "theta": [0.1, 0.2, 0.3]}"#);
    let out = tmp.path().join("u");
    assert!(dfchain(&["check-uniqueness", "--spec", &spec, "--out", out.to_str().unwrap()]).status.success());
    let rep: Value = serde_json::from_str(&fs::read_to_string(out.join("uniqueness.json")).unwrap()).unwrap();
    assert_eq!(rep["verdict"], "UniqueByH1H2H3");
    assert_eq!(rep["r"], 0.5);
    assert_eq!(rep["h3_index"]["delta"], 0.1);
}

#[test]
fn malformed_specs_exit_two_with_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let unknown = write_spec(tmp.path(), "unknown.json", r#"{"kind": "constant", "p": [0.5, 0.5], "q": 1}"#);
    let o = dfchain(&["simulate", "--spec", &unknown, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`q`"));

    let syntax = write_spec(tmp.path(), "syntax.json", "{\n  \"kind\": \"constant\",\n  \"p\": [0.5, 0.5\n}\n");
    let o = dfchain(&["simulate", "--spec", &syntax, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"), "{}", String::from_utf8_lossy(&o.stderr));

    let good = write_spec(tmp.path(), "good.json", r#"{"kind": "constant", "p": [0.5, 0.5]}"#);
    let o = dfchain(&["simulate", "--spec", &good, "--dim", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(dfchain(&["invariant", "--out", out.to_str().unwrap()]).status.code(), Some(2));
}
