use std::fs;
use std::path::Path;

use muskat::analysis::EnergyLedger;
use muskat::cli::{main_with_args, EXIT_CONFIG, EXIT_OK};
use muskat::io::read_checkpoint;
use serde_json::Value;

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_config(out: &Path, t_final: f64) -> String {
    format!(
        r#"{{"model": {{"dimensionless": {{"eps": 0.1, "delta": 0.25, "nu": 4}}}},
            "numerics": {{"mu": 0.01, "cutoff": 16, "m": 32, "dt": 0.01, "t_final": {t_final}}},
            "initial": {{"modes": [[1, 2e-4, 0], [2, 0, 5e-5]]}},
            "output_dir": "{}", "output_interval": 0.05}}"#,
        out.display()
    )
}

#[test]
fn run_writes_ledger_checkpoint_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &run_config(&out, 0.2));
    assert_eq!(main_with_args(["muskat", "run", &cfg]), EXIT_OK);
    let ledger = EnergyLedger::read_csv(fs::File::open(out.join("ledger.csv")).unwrap()).unwrap();
    assert_eq!(ledger.rows.len(), 5);
    assert!(ledger.integral_consistency() < 1e-3);
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["verdict"], "stable");
    assert_eq!(summary["energy_monotone"], true);
    let ck = read_checkpoint(&out.join("checkpoint.bin")).unwrap();
    assert!((ck.state.t - 0.2).abs() < 1e-12);
    assert_eq!(ck.ledger, ledger);
    assert_eq!(main_with_args(["muskat", "radius", out.join("checkpoint.bin").to_str().unwrap()]), EXIT_OK);
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let cfg_a = write_config(dir.path(), &run_config(&a, 0.2));
    assert_eq!(main_with_args(["muskat", "run", &cfg_a]), EXIT_OK);
    let cfg_b = dir.path().join("b.json");
    fs::write(&cfg_b, run_config(&b, 0.1)).unwrap();
    let cfg_b = cfg_b.to_str().unwrap();
    assert_eq!(main_with_args(["muskat", "run", cfg_b]), EXIT_OK);
    let resume = dir.path().join("resume.bin");
    fs::copy(b.join("checkpoint.bin"), &resume).unwrap();
    let code = main_with_args(["muskat", "run", cfg_b, "--t-final", "0.2", "--resume", resume.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let full = read_checkpoint(&a.join("checkpoint.bin")).unwrap();
    let resumed = read_checkpoint(&b.join("checkpoint.bin")).unwrap();
    assert!((full.state.t - resumed.state.t).abs() < 1e-12);
    let diff = full.state.h.sub(&resumed.state.h).sup_abs();
    assert!(diff <= 1e-12 * full.state.h.sup_abs(), "{diff}");
    assert_eq!(resumed.ledger.rows.len(), full.ledger.rows.len());
}

#[test]
fn unknown_keys_and_bad_parameters_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad_key = run_config(&out, 0.1).replace("\"mu\"", "\"mu_typo\"");
    assert_eq!(main_with_args(["muskat", "run", &write_config(dir.path(), &bad_key)]), EXIT_CONFIG);
    let mismatched = run_config(&out, 0.1).replace("\"nu\": 4", "\"nu\": 0.5");
    assert_eq!(main_with_args(["muskat", "run", &write_config(dir.path(), &mismatched)]), EXIT_CONFIG);
    let large = run_config(&out, 0.1).replace("2e-4", "0.01");
    assert_eq!(main_with_args(["muskat", "run", &write_config(dir.path(), &large)]), EXIT_CONFIG);
    assert_eq!(main_with_args(["muskat", "verify", "--trials", "0"]), EXIT_CONFIG);
    assert_eq!(main_with_args(["muskat", "frobnicate"]), EXIT_CONFIG);
}

#[test]
fn convert_accepts_physical_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phys.json");
    fs::write(&path, r#"{"depth": 0.5, "length": 1, "amplitude": 0.05, "gamma": 10, "rho": 1, "gravity": 1}"#).unwrap();
    assert_eq!(main_with_args(["muskat", "convert", path.to_str().unwrap(), "--h0", "1e-5"]), EXIT_OK);
    fs::write(&path, r#"{"depth": 0.5, "length": 1, "amplitude": 0.05, "gamma": 10, "rho": 1, "gravity": 1, "g": 9}"#)
        .unwrap();
    assert_eq!(main_with_args(["muskat", "convert", path.to_str().unwrap()]), EXIT_CONFIG);
}

#[test]
fn sweep_runs_every_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let base = run_config(&out, 0.05);
    let body = format!(r#"{{"base": {base}, "nu": [3, 4], "amplitudes": [1e-4, 2e-4]}}"#);
    let path = dir.path().join("sweep.json");
    fs::write(&path, body).unwrap();
    assert_eq!(main_with_args(["muskat", "sweep", path.to_str().unwrap()]), EXIT_OK);
    let mut reader = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    assert_eq!(reader.records().count(), 4);
    assert!(out.join("point_0003").join("ledger.csv").exists());
}
