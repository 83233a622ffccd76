use std::path::Path;
use std::process::Command;

use adm_core::io::output::read_snapshot;

const BASE: &str = "grid.L = 2pi
grid.M = 16
params.nu = 1
params.kappa = 1
params.alpha = 1
";

fn adm(sub: &str, config: &str, out: &Path) -> i32 {
    let cfg = out.with_extension("cfg");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_adm"))
        .args([sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn error_json(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("error.json")).unwrap()).unwrap()
}

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = format!("{BASE}integrator.t_end = 0.05\noutput.snapshot_stride = 25\nforcing.kind = single_mode\n");
    assert_eq!(adm("simulate", &config, &out), 0);
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("# version = adm-core"));
    assert!(csv.contains("# grid.M = 16\n"));
    assert!(csv.contains("# cutoff_profile = "));
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "t,y,z,Y,Z,R1sq,R2sq,chi_value,dn_state_norm,p_norm,q_norm,cone_margin");
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 51);

    let snap = read_snapshot(&out.join("snapshot_00000025.adm2")).unwrap();
    assert_eq!(snap.modes, 16);
    assert!(out.join("snapshot_00000025.adm2.meta").exists());
    let last = read_snapshot(&out.join("final.adm2")).unwrap().to_state().unwrap();
    assert!(last.is_finite());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["metadata"]["grid.M"], "16");
    assert_eq!(summary["y_within_bound"], true);
}

#[test]
fn bad_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    assert_eq!(adm("simulate", &BASE.replace("grid.M = 16", "grid.M = 7"), &out), 2);
    let err = error_json(&out);
    assert_eq!(err["exit_code"], 2);
    assert_eq!(err["key"], "grid.M");
}

#[test]
fn duplicate_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dup");
    assert_eq!(adm("gap", &format!("{BASE}params.nu = 2\n"), &out), 2);
    assert_eq!(error_json(&out)["key"], "params.nu");
    let out = dir.path().join("unknown");
    assert_eq!(adm("gap", &format!("{BASE}params.viscosity = 2\n"), &out), 2);
    assert_eq!(error_json(&out)["key"], "params.viscosity");
}

#[test]
fn experiment_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mismatch");
    assert_eq!(adm("gap", &format!("experiment = simulate\n{BASE}"), &out), 2);
    assert_eq!(error_json(&out)["key"], "experiment");
}

#[test]
fn cfl_violation_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cfl");
    let config = format!("{BASE}integrator.dt = 0.5\ninitial.amplitude = 50\n");
    assert_eq!(adm("simulate", &config, &out), 3);
    assert_eq!(error_json(&out)["error"], "cfl_violation");
}

#[test]
fn verify_ops_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify");
    assert_eq!(adm("verify-ops", &format!("{BASE}verify.samples = 3\n"), &out), 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn gap_and_squeeze_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gap");
    assert_eq!(adm("gap", &format!("{BASE}params.lipschitz_c = 0.5\n"), &out), 0);
    let gap: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("gap.json")).unwrap()).unwrap();
    assert_eq!(gap["cone"]["cutoff_eigenvalue"], 5.0);
    assert_eq!(gap["cone"]["next_eigenvalue"], 8.0);
    assert_eq!(gap["eta_reductions"].as_array().unwrap().len(), 2);

    let out = dir.path().join("squeeze");
    let config = format!("{BASE}integrator.t_end = 0.1\nintegrator.observer_stride = 10\nsqueeze.pairs = 2\nsqueeze.calibration_samples = 100\n");
    assert_eq!(adm("squeeze", &config, &out), 0);
    let verdict: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["pairs"].as_array().unwrap().len(), 2);
    assert!(std::fs::read_to_string(out.join("squeeze.csv")).unwrap().contains("pair,t,p_norm,q_norm,cone_margin"));
}
