use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use adm_ffi::*;

const CONFIG: &str = "grid.L = 2pi
grid.M = 16
params.nu = 1
params.kappa = 1
params.alpha = 1
integrator.dt = 0.001
forcing.kind = single_mode
forcing.applies_to = g
";

fn last_error() -> String {
    unsafe { CStr::from_ptr(adm_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn grid_handle() {
    let mut grid = ptr::null_mut();
    unsafe {
        assert_eq!(adm_grid_new(2.0 * std::f64::consts::PI, 16, &mut grid), AdmStatus::Ok);
        assert!((adm_grid_lambda1(grid) - 1.0).abs() < 1e-15);
        let mut buf = [0.0; 4];
        let n = adm_grid_eigenvalues(grid, buf.as_mut_ptr(), buf.len());
        assert!(n > 4);
        assert_eq!(buf, [1.0, 2.0, 4.0, 5.0]);
        adm_grid_free(grid);
    }
}

#[test]
fn invalid_grid_reports_error() {
    let mut grid = ptr::null_mut();
    let status = unsafe { adm_grid_new(1.0, 7, &mut grid) };
    assert_eq!(status, AdmStatus::ConfigError);
    assert!(grid.is_null());
    assert!(last_error().contains('7'));
    assert_eq!(unsafe { adm_grid_new(1.0, 16, ptr::null_mut()) }, AdmStatus::NullPointer);
}

#[test]
fn simulation_lifecycle() {
    let cfg = CString::new(CONFIG).unwrap();
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(adm_simulation_from_config(cfg.as_ptr(), &mut sim), AdmStatus::Ok);
        assert_eq!(adm_simulation_step(sim, 100), AdmStatus::Ok);
        assert!((adm_simulation_time(sim) - 0.1).abs() < 1e-12);
        let mut d = AdmDiagnostics::default();
        assert_eq!(adm_simulation_diagnostics(sim, &mut d), AdmStatus::Ok);
        assert!(d.y > 0.0 && d.dn_state_norm > 0.0);
        let mut samples = vec![0.0; 256];
        assert_eq!(adm_simulation_samples(sim, 2, samples.as_mut_ptr(), 256), AdmStatus::Ok);
        assert!(samples.iter().any(|&x| x != 0.0));
        assert_eq!(adm_simulation_samples(sim, 2, samples.as_mut_ptr(), 10), AdmStatus::InvalidArgument);
        assert_eq!(adm_simulation_samples(sim, 9, samples.as_mut_ptr(), 256), AdmStatus::InvalidArgument);
        adm_simulation_free(sim);
    }
}

#[test]
fn bad_config_is_config_error() {
    let cfg = CString::new("grid.L = 1\n").unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { adm_simulation_from_config(cfg.as_ptr(), &mut sim) }, AdmStatus::ConfigError);
    assert!(last_error().contains("grid.M"));
}

#[test]
fn experiment_runner_returns_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CString::new(format!("{CONFIG}integrator.t_end = 0.01\n")).unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let sim = CString::new("simulate").unwrap();
    assert_eq!(unsafe { adm_run_experiment(cfg.as_ptr(), sim.as_ptr(), out.as_ptr()) }, 0);
    assert!(dir.path().join("diagnostics.csv").exists());
    let bogus = CString::new("bogus").unwrap();
    assert_eq!(unsafe { adm_run_experiment(cfg.as_ptr(), bogus.as_ptr(), out.as_ptr()) }, 2);
}

#[test]
fn header_declares_the_api_and_compiles() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/adm.h")).unwrap();
    for name in [
        "adm_last_error_message",
        "adm_version",
        "adm_grid_new",
        "adm_grid_free",
        "adm_simulation_from_config",
        "adm_simulation_step",
        "adm_simulation_samples",
        "adm_run_experiment",
        "ADM_STATUS_NUMERICAL_FAILURE = 3",
    ] {
        assert!(header.contains(name), "{name} missing");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("probe.c");
    std::fs::write(&src, "#include \"adm.h\"\nint main(void) { AdmGrid *g = 0; return adm_grid_new(1.0, 8, &g) == ADM_STATUS_OK ? 0 : 1; }\n").unwrap();
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-I"]).arg(format!("{dir}/include")).arg(&src).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(adm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
