//! End-to-end tests of the `locfield` binary: exit codes, artifact schema,
//! determinism, and the homogeneity of the response in the coupling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_locfield")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn locfield")
}

fn write_scenario(dir: &Path, name: &str, lambdas: &str, gaps: &str) -> String {
    write_scenario_gamma(dir, name, lambdas, gaps, 1.0)
}

fn write_scenario_gamma(
    dir: &Path,
    name: &str,
    lambdas: &str,
    gaps: &str,
    gamma: f64,
) -> String {
    let path = dir.join(name);
    let text = format!(
        r#"
lambdas = {lambdas}

[potential]
kind = "quadratic"
ell = 0.2
n_max = 1

[field]
epsilon = 1.0e-5

[window]
kind = "gaussian"
t_width = 1.0

[detector]
accessible = 0
gamma = {gamma}

[sweep]
gaps = {gaps}
"#
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_64() {
    // unknown flag
    let out = run(&["modes", "--bogus"]);
    assert_eq!(out.status.code(), Some(64));
    // missing scenario file
    let out = run(&["modes", "--scenario", "/nonexistent/file.toml"]);
    assert_eq!(out.status.code(), Some(64));
    // schema violation
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "unknown_key = 1\n").unwrap();
    let out = run(&["modes", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
    // verify with a single coupling value
    let scenario = write_scenario(dir.path(), "one.toml", "[0.01]", "[]");
    let out = run(&["verify", "--scenario", &scenario]);
    assert_eq!(out.status.code(), Some(64));
    // help is not a usage error
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn modes_artifacts_and_lowest_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "modes",
        "--scenario",
        "../../scenarios/box_modes.toml",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    // unit box, massless: ground frequency pi sqrt(3) = 5.441398
    assert!(
        stdout.lines().next().unwrap().contains("5.441398"),
        "stdout: {stdout}"
    );
    let modes: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("modes.json")).unwrap()).unwrap();
    assert_eq!(modes.as_array().unwrap().len(), 27);
    let profiles = fs::read_to_string(out_dir.join("profiles.csv")).unwrap();
    assert!(profiles.starts_with("index,x,phi\n"));
}

#[test]
fn response_deterministic_and_homogeneous_in_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "s.toml", "[0.01, 0.02]", "[1.0, 2.0]");

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = run(&["response", "--scenario", &scenario, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    let csv_a = fs::read_to_string(out_a.join("response.csv")).unwrap();
    let csv_b = fs::read_to_string(out_b.join("response.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "rerun is not byte-identical");

    let rows: Vec<Vec<f64>> = csv_a
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    // schema: Omega,T,ell,lambda,P,err_P,Re_C20,Im_C20,path_delta
    for gap_row in 0..2 {
        let p_small = rows[gap_row][4];
        let p_large = rows[2 + gap_row][4];
        assert!(p_small > 0.0);
        assert_eq!(p_large, 4.0 * p_small, "doubled coupling must scale P by exactly 4");
    }
}

#[test]
fn response_zero_coupling_zero_probability() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "z.toml", "[0.0]", "[1.0, 2.0]");
    let out_dir = dir.path().join("out");
    let out = run(&["response", "--scenario", &scenario, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("response.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let p: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(p, 0.0);
    }
}

#[test]
fn state_artifact_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    // detune the detector to gap = 2/T, where both response paths resolve P
    let gamma = 2.0 / (3.0f64.sqrt() / 0.2);
    let scenario = write_scenario_gamma(dir.path(), "s.toml", "[0.01]", "[]", gamma);
    let out_dir = dir.path().join("out");
    let out = run(&["state", "--scenario", &scenario, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("state.json")).unwrap()).unwrap();
    let states = doc["states"].as_array().unwrap();
    assert_eq!(states.len(), 1);
    let entry = &states[0];
    let trace: f64 = (0..3)
        .map(|i| entry["reduced_state"]["re"][i][i].as_f64().unwrap())
        .sum();
    assert!((trace - 1.0).abs() < 1e-12, "trace {trace}");
    assert!(entry["frobenius_distance"].as_f64().unwrap() >= 0.0);
    assert!(entry["reduced_state"]["positivity_ok"].as_bool().unwrap());
}
