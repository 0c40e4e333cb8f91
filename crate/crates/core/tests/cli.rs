use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use thinfilm::harness::output::read_trajectory_csv;

fn thinfilm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thinfilm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_preset_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = thinfilm(&["run", "preset:newtonian", "--out", "res", "--snapshots", "3", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    let summary = json(&res.join("summary.json"));
    assert_eq!(summary["regime"], "Exponential");
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["config"]["preset"], "newtonian");
    let samples = read_trajectory_csv(&res.join("trajectory.csv")).unwrap();
    assert!(samples.len() > 10);
    let snap = fs::read_to_string(res.join("snapshots/snapshot_0000.csv")).unwrap();
    assert!(snap.starts_with("x,u\n"));
    assert_eq!(snap.lines().count(), 65);
    assert!(res.join("snapshots/index.csv").exists());
}

#[test]
fn run_config_file_with_thickening_preset() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "preset = \"thickening\"\n[grid]\nn_cells = 32\n[output]\ndir = \"thick\"\n",
    )
    .unwrap();
    let out = thinfilm(&["run", "c.toml", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("thick/summary.json"));
    assert_eq!(summary["regime"], "FiniteTimeExtinction");
    assert!(summary["t_star"].as_f64().unwrap() > 0.0);
    assert_eq!(summary["termination"]["kind"], "extinction");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.toml"), "").unwrap();
    fs::write(dir.path().join("bad.toml"), "[grid]\nn_cells = \"many\"\n").unwrap();
    for args in [
        vec!["run", "empty.toml"],
        vec!["run", "bad.toml"],
        vec!["run", "missing.toml"],
        vec!["run", "preset:nope"],
        vec!["sweep", "preset:newtonian", "--param", "viscosity", "--values", "1"],
        vec!["sigma-study", "preset:newtonian", "--sigmas", "0.1,0.01,0.001"],
        vec!["frobnicate"],
    ] {
        let out = thinfilm(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn positivity_breach_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    // a narrow bump: fourth-order spreading digs troughs at its feet, below
    // the strict positivity floor
    let modes: Vec<String> = (1..30)
        .map(|k| {
            let k = k as f64;
            let c = (-(k * std::f64::consts::PI * 0.05).powi(2) / 4.0).exp() * (k * std::f64::consts::FRAC_PI_2).cos();
            format!("[{k}, {c}]")
        })
        .collect();
    fs::write(
        dir.path().join("c.toml"),
        format!(
            "[grid]\nn_cells = 64\n[initial]\nepsilon = 0.1\nmodes = [{}]\n\
             [integrator]\nt_end = 0.001\npositivity_floor = 0.999\n[output]\ndir = \"o\"\n",
            modes.join(", ")
        ),
    )
    .unwrap();
    let out = thinfilm(&["run", "c.toml", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("o/summary.json"));
    assert_eq!(summary["termination"]["kind"], "positivity_breach");
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "preset = \"thinning2\"\n[grid]\nn_cells = 16\n[integrator]\nt_end = 0.5\n[output]\ndir = \"sw\"\n",
    )
    .unwrap();
    let out = thinfilm(&["sweep", "c.toml", "--param", "alpha", "--values", "2,3", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = json(&dir.path().join("sw/sweep.json"));
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert_eq!(rows[0]["theoretical_exponent"], -2.0);
    assert_eq!(rows[1]["theoretical_exponent"], -1.0);
    let csv = fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.path().join("sw/alpha=2/summary.json").exists());
}

#[test]
fn sigma_study_reports_distances() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "preset = \"thinning2\"\n[grid]\nn_cells = 16\n[integrator]\nt_end = 0.01\n[output]\ndir = \"ss\"\n",
    )
    .unwrap();
    let out = thinfilm(&["sigma-study", "c.toml", "--sigmas", "0.1,0.01,0.001", "--quiet"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let study = json(&dir.path().join("ss/sigma_study.json"));
    assert_eq!(study["distances"].as_array().unwrap().len(), 2);
    assert_eq!(study["decreasing"], true);
}

#[test]
fn selfcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = thinfilm(&["selfcheck"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["failures"].as_array().unwrap().is_empty());
}
