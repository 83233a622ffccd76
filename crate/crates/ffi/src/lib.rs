//! C ABI over `adm-core`.
//!
//! Handles are opaque heap objects released with the matching `_free`
//! function. Every fallible call returns an [`AdmStatus`]; the message of
//! the last failure on the calling thread is available from
//! [`adm_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use adm_core::diagnostics::compute_row;
use adm_core::io::config::{parse_config, Experiment};
use adm_core::io::run::run;
use adm_core::{AdmError, Model, Scheme, State, Stepper, System, TorusGrid};

/// Status codes; values match the command-line exit codes where they overlap.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdmStatus {
    Ok = 0,
    AssertionFailed = 1,
    ConfigError = 2,
    NumericalFailure = 3,
    InvalidArgument = 4,
    NullPointer = 5,
    IoError = 6,
    Panic = 7,
}

/// Periodic grid handle.
pub struct AdmGrid {
    grid: TorusGrid,
}

/// A model, its current state and time.
pub struct AdmSimulation {
    model: Model,
    state: State,
    time: f64,
    dt: f64,
    scheme: Scheme,
    system: System,
}

/// Scalar diagnostics of the current state.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct AdmDiagnostics {
    pub t: f64,
    pub y: f64,
    pub z: f64,
    pub big_y: f64,
    pub big_z: f64,
    pub chi_value: f64,
    pub dn_state_norm: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let clean = message.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(e: &AdmError) -> AdmStatus {
    match e {
        AdmError::Io(_) => AdmStatus::IoError,
        AdmError::InvalidArgument(_)
        | AdmError::DimensionMismatch { .. }
        | AdmError::GridMismatch
        | AdmError::EmptySeries
        | AdmError::OracleGridTooLarge(_)
        | AdmError::NoQualifyingGap { .. } => AdmStatus::InvalidArgument,
        _ => match e.exit_code() {
            2 => AdmStatus::ConfigError,
            3 => AdmStatus::NumericalFailure,
            _ => AdmStatus::InvalidArgument,
        },
    }
}

/// Runs `body`, converting errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), (AdmStatus, String)>) -> AdmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => AdmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AdmStatus::Panic
        }
    }
}

fn core_err(e: AdmError) -> (AdmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(name: &str) -> (AdmStatus, String) {
    (AdmStatus::NullPointer, format!("{name} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (AdmStatus, String)> {
    if p.is_null() {
        return Err(null_err(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (AdmStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn adm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static, NUL-terminated version string.
#[no_mangle]
pub extern "C" fn adm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an `m × m` grid of side `side_length`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn adm_grid_new(side_length: f64, modes: usize, out: *mut *mut AdmGrid) -> AdmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let grid = TorusGrid::new(side_length, modes).map_err(core_err)?;
        *out = Box::into_raw(Box::new(AdmGrid { grid }));
        Ok(())
    })
}

/// # Safety
/// `grid` must come from [`adm_grid_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn adm_grid_free(grid: *mut AdmGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// `λ₁ = (2π/L)²`; NaN for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn adm_grid_lambda1(grid: *const AdmGrid) -> f64 {
    grid.as_ref().map_or(f64::NAN, |g| g.grid.lambda1())
}

/// Writes the distinct retained eigenvalues in increasing order into
/// `out` (at most `len`); returns how many exist.
///
/// # Safety
/// `grid` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adm_grid_eigenvalues(grid: *const AdmGrid, out: *mut f64, len: usize) -> usize {
    let Some(g) = grid.as_ref() else { return 0 };
    let values = g.grid.enumerate_eigenvalues();
    if !out.is_null() {
        for (i, e) in values.iter().take(len).enumerate() {
            *out.add(i) = e.ksq;
        }
    }
    values.len()
}

/// Builds a simulation from configuration text in the command-line format.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adm_simulation_from_config(config: *const c_char, out: *mut *mut AdmSimulation) -> AdmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let text = read_str(config, "config")?;
        let cfg = parse_config(text).map_err(core_err)?;
        let grid = cfg.grid().map_err(core_err)?;
        let model = Model::new(cfg.model_params(&grid).map_err(core_err)?).map_err(core_err)?;
        let state = adm_core::init::initial_state(&grid, &cfg.initial).map_err(core_err)?;
        cfg.integrator.validate().map_err(core_err)?;
        *out = Box::into_raw(Box::new(AdmSimulation {
            model,
            state,
            time: 0.0,
            dt: cfg.integrator.dt,
            scheme: cfg.integrator.scheme,
            system: cfg.system,
        }));
        Ok(())
    })
}

/// # Safety
/// `sim` must come from [`adm_simulation_from_config`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn adm_simulation_free(sim: *mut AdmSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances `steps` time steps. On failure the state is left at the last
/// successful step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn adm_simulation_step(sim: *mut AdmSimulation, steps: usize) -> AdmStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null_err("sim"))?;
        let stepper = Stepper::new(&sim.model, sim.dt, sim.scheme, sim.system);
        for _ in 0..steps {
            sim.state = stepper.step(&sim.state, sim.time).map_err(core_err)?;
            sim.time += sim.dt;
        }
        Ok(())
    })
}

/// Current time; NaN for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn adm_simulation_time(sim: *const AdmSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.time)
}

/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adm_simulation_diagnostics(sim: *const AdmSimulation, out: *mut AdmDiagnostics) -> AdmStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null_err("sim"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let row = compute_row(sim.time, &sim.state, &sim.model);
        *out = AdmDiagnostics {
            t: row.t,
            y: row.y,
            z: row.z,
            big_y: row.big_y,
            big_z: row.big_z,
            chi_value: row.chi_value,
            dn_state_norm: row.dn_state_norm,
        };
        Ok(())
    })
}

/// Copies grid samples of field `which` (0: v₁, 1: v₂, 2: ϑ), row-major
/// with `x₁` slow, into `out`, which must hold exactly `M²` doubles.
///
/// # Safety
/// `sim` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn adm_simulation_samples(sim: *const AdmSimulation, which: c_int, out: *mut f64, len: usize) -> AdmStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null_err("sim"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let field = match which {
            0 => sim.state.v.component(0),
            1 => sim.state.v.component(1),
            2 => &sim.state.theta,
            _ => return Err((AdmStatus::InvalidArgument, format!("field index {which} not in 0..=2"))),
        };
        let samples = field.to_samples();
        if samples.len() != len {
            return Err((AdmStatus::InvalidArgument, format!("buffer holds {len} values, need {}", samples.len())));
        }
        ptr::copy_nonoverlapping(samples.as_ptr(), out, len);
        Ok(())
    })
}

/// Runs a full experiment (`simulate`, `gap`, `squeeze` or `verify-ops`)
/// writing artifacts into `out_dir`. Returns the command-line exit code.
///
/// # Safety
/// All arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn adm_run_experiment(config: *const c_char, experiment: *const c_char, out_dir: *const c_char) -> c_int {
    let mut code = 0;
    let status = guard(|| {
        let text = read_str(config, "config")?;
        let name = read_str(experiment, "experiment")?;
        let dir = read_str(out_dir, "out_dir")?;
        let exp = Experiment::parse(name)
            .ok_or_else(|| (AdmStatus::ConfigError, format!("unknown experiment `{name}`")))?;
        let cfg = parse_config(text).map_err(core_err)?;
        let outcome = run(&cfg, Some(exp), Path::new(dir)).map_err(|e| {
            code = e.exit_code();
            core_err(e)
        })?;
        code = outcome.exit_code;
        Ok(())
    });
    match status {
        AdmStatus::Ok => code,
        _ if code != 0 => code,
        s => s as c_int,
    }
}
