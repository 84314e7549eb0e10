//! The command-line binary: outputs, report files and exit codes.

use std::process::Command;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bell-evidence")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn mle_prints_the_three_maxima() {
    let (code, out, _) = run(&["mle", "boulder-5", "--gamma", "0.000722"]);
    assert_eq!(code, 0);
    assert!(out.contains("log10 L_QM  -46.58"), "{out}");
}

#[test]
fn invalid_gamma_is_a_validation_error() {
    let (code, _, err) = run(&["mle", "delft-1", "--gamma", "1.5"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn unknown_dataset_is_a_validation_error() {
    assert_eq!(run(&["evidence", "nowhere-9"]).0, 2);
}

#[test]
fn maximum_at_range_edge_is_a_solver_failure() {
    let (code, out, _) = run(&["gamma-scan", "boulder-5", "--range", "0.0005:0.0006", "--points", "5"]);
    assert_eq!(code, 3);
    assert_eq!(out.lines().count(), 6);
}

#[test]
fn gamma_scan_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) =
        run(&["gamma-scan", "vienna-8", "--range", "0.0025:0.0034", "--points", "11", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("gamma,"));
    assert!(err.contains("estimated γ = 0.0026"), "{err}");
    assert!(dir.path().join("vienna-8-gamma-scan-ci.csv").exists());
}

#[test]
fn counts_file_needs_params() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    std::fs::write(&path, "setting,++,+0,0+,00\nab,23,3,4,23\nab',33,11,5,30\na'b,22,10,6,24\na'b',4,20,21,6\n").unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(run(&["mle", p]).0, 2);
    let (code, out, _) = run(&["mle", p, "--params", "delft"]);
    assert_eq!(code, 0);
    assert!(out.contains("run at γ = 1"), "{out}");
}

#[test]
fn reproduce_writes_reports_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = ["reproduce", "delft-1", "--sample-size", "2000", "--mocks", "5", "--out", d];
    assert_eq!(run(&args).0, 0);
    let json = dir.path().join("delft-1-ci.json");
    let first = std::fs::read(&json).unwrap();
    assert_eq!(run(&args).0, 0);
    assert_eq!(first, std::fs::read(&json).unwrap());
    assert!(dir.path().join("delft-1-ci.txt").exists());
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["profile"], "ci");
}
