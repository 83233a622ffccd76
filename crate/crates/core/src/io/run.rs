//! Experiment orchestration for the command line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diagnostics::{absorbing_radii, AbsorbingRadii, DiagnosticsRecorder};
use crate::error::{AdmError, Result};
use crate::field::mean_warning_count;
use crate::init;
use crate::integrate::{simulate, IntegratorConfig, Observer};
use crate::io::config::{Experiment, RunConfig};
use crate::io::output::{self, Metadata, VERSION};
use crate::model::{EtaReduction, Model, State, CUTOFF_PROFILE};
use crate::squeeze::{self, Calibration, ConeSpec, PairJob, PairStart};
use crate::verify;

/// Files written by a run and the process exit code.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
}

/// Machine-readable error record.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub exit_code: i32,
}

impl ErrorRecord {
    pub fn from_error(e: &AdmError) -> Self {
        ErrorRecord {
            error: e.kind(),
            message: e.to_string(),
            key: match e {
                AdmError::Config { key, .. } => Some(key.clone()),
                _ => None,
            },
            exit_code: e.exit_code(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.error))
    }
}

/// Resolved configuration, code version and cutoff profile.
pub fn metadata(config: &RunConfig, experiment: Experiment) -> Metadata {
    let mut meta: Metadata = vec![
        ("version".into(), VERSION.into()),
        ("experiment".into(), experiment.name().into()),
    ];
    meta.extend(config.resolved.iter().filter(|(k, _)| k != "experiment").cloned());
    meta.push(("cutoff_profile".into(), CUTOFF_PROFILE.into()));
    meta
}

/// Chooses the experiment from the subcommand and the config, which must
/// agree when both are present.
pub fn resolve_experiment(config: &RunConfig, subcommand: Option<Experiment>) -> Result<Experiment> {
    match (subcommand, config.experiment) {
        (Some(a), Some(b)) if a != b => Err(AdmError::config(
            "experiment",
            format!("config says {} but the command is {}", b.name(), a.name()),
        )),
        (Some(a), _) | (None, Some(a)) => Ok(a),
        (None, None) => Err(AdmError::config("experiment", "missing mandatory key")),
    }
}

/// Runs one experiment, writing artifacts under `out`. Failures are
/// returned as errors; verdict failures yield exit code 1.
pub fn run(config: &RunConfig, subcommand: Option<Experiment>, out: &Path) -> Result<RunOutcome> {
    let experiment = resolve_experiment(config, subcommand)?;
    fs::create_dir_all(out)?;
    let meta = metadata(config, experiment);
    match experiment {
        Experiment::Simulate => run_simulate(config, &meta, out),
        Experiment::Gap => run_gap(config, &meta, out),
        Experiment::Squeeze => run_squeeze(config, &meta, out),
        Experiment::VerifyOps => run_verify(config, &meta, out),
    }
}

/// Writes `error.json` into `out` (best effort) and returns the exit code.
pub fn report_error(e: &AdmError, out: Option<&Path>) -> i32 {
    let record = ErrorRecord::from_error(e);
    let json = record.to_json();
    if let Some(dir) = out {
        if fs::create_dir_all(dir).is_ok() {
            let _ = output::write_file(&dir.join("error.json"), format!("{json}\n").as_bytes());
        }
    }
    eprintln!("{json}");
    record.exit_code
}

struct SnapshotObserver<'a> {
    dir: &'a Path,
    every: usize,
    dt: f64,
    written: Vec<PathBuf>,
    meta: String,
}

impl Observer for SnapshotObserver<'_> {
    fn observe(&mut self, t: f64, state: &State) -> Result<()> {
        let step = (t / self.dt).round() as usize;
        if self.every > 0 && step.is_multiple_of(self.every) {
            let path = self.dir.join(format!("snapshot_{step:08}.adm2"));
            write_snapshot(&path, state, &self.meta, t)?;
            self.written.push(path);
        }
        Ok(())
    }
}

fn write_snapshot(path: &Path, state: &State, meta: &str, t: f64) -> Result<()> {
    output::write_file(path, &output::snapshot_bytes(state))?;
    let sidecar = format!("{meta}# t = {}\n", output::format_real(t));
    output::write_file(&path.with_extension("adm2.meta"), sidecar.as_bytes())
}

#[derive(Serialize)]
struct SimulateSummary {
    final_time: f64,
    steps: usize,
    samples: usize,
    radii: AbsorbingRadii,
    y_within_bound: bool,
    z_within_bound: bool,
    worst_y_excess: f64,
    worst_z_excess: f64,
    mean_warnings: u64,
}

/// Slack on the transient bounds.
const BOUND_SLACK: f64 = 1e-6;

fn run_simulate(config: &RunConfig, meta: &Metadata, out: &Path) -> Result<RunOutcome> {
    let grid = config.grid()?;
    let model = Model::new(config.model_params(&grid)?).map_err(|e| AdmError::config("params", e.to_string()))?;
    let initial = init::initial_state(&grid, &config.initial).map_err(|e| AdmError::config("initial.kind", e.to_string()))?;

    let header = output::metadata_header(meta);
    let mut recorder = DiagnosticsRecorder::new(&model);
    let snapshot_every = config.output.snapshot_stride;
    let mut snaps = SnapshotObserver {
        dir: out,
        every: snapshot_every,
        dt: config.integrator.dt,
        written: Vec::new(),
        meta: header.clone(),
    };
    let mut stride_cfg: IntegratorConfig = config.integrator;
    if snapshot_every > 0 {
        // snapshots need every step; rows are thinned afterwards
        stride_cfg.observer_stride = 1;
    }
    let trajectory = simulate(&model, &initial, &stride_cfg, config.system, &mut [&mut recorder, &mut snaps])?;
    let stride = config.integrator.observer_stride;
    if snapshot_every > 0 {
        recorder.rows = recorder
            .rows
            .into_iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0)
            .map(|(_, r)| r)
            .collect();
    }

    let mut artifacts = Vec::new();
    let csv_path = out.join("diagnostics.csv");
    output::write_file(&csv_path, output::diagnostics_csv(meta, &recorder.rows).as_bytes())?;
    artifacts.push(csv_path);
    artifacts.extend(snaps.written);
    if config.output.final_snapshot {
        let path = out.join("final.adm2");
        write_snapshot(&path, &trajectory.final_state, &header, trajectory.final_time)?;
        artifacts.push(path);
    }

    let excess = |f: fn(&crate::diagnostics::DiagnosticsRow) -> f64, g: fn(&crate::diagnostics::DiagnosticsRow) -> Option<f64>| {
        recorder
            .rows
            .iter()
            .map(|r| f(r) - g(r).unwrap_or(f64::INFINITY))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let worst_y_excess = excess(|r| r.y, |r| r.r1sq_bound);
    let worst_z_excess = excess(|r| r.z, |r| r.r2sq_bound);
    let summary = SimulateSummary {
        final_time: trajectory.final_time,
        steps: trajectory.steps,
        samples: recorder.rows.len(),
        radii: recorder.radii()?,
        y_within_bound: worst_y_excess <= BOUND_SLACK,
        z_within_bound: worst_z_excess <= BOUND_SLACK,
        worst_y_excess,
        worst_z_excess,
        mean_warnings: mean_warning_count(),
    };
    let json_path = out.join("summary.json");
    output::write_file(&json_path, output::json_report(meta, &summary)?.as_bytes())?;
    artifacts.push(json_path);
    Ok(RunOutcome { exit_code: 0, artifacts })
}

#[derive(Serialize)]
struct EtaReport {
    reduction: EtaReduction,
    eta: f64,
    threshold: f64,
    beta_n: f64,
}

#[derive(Serialize)]
struct GapReport {
    lipschitz_c: f64,
    calibration: Option<Calibration>,
    lipschitz: f64,
    eta: f64,
    threshold: f64,
    cone: ConeSpec,
    beta_n: f64,
    eta_reductions: Vec<EtaReport>,
    radii: AbsorbingRadii,
    norm_equivalence_constant: f64,
}

fn calibrated_model(config: &RunConfig, calibrate: bool, samples: usize, seed: u64) -> Result<(Model, Option<Calibration>)> {
    let grid = config.grid()?;
    let params = config.model_params(&grid)?;
    let model = Model::new(params.clone()).map_err(|e| AdmError::config("params", e.to_string()))?;
    if !calibrate {
        return Ok((model, None));
    }
    let cal = squeeze::calibrate_lipschitz(&model, samples, seed)?;
    let mut tuned = params;
    if cal.implied_c > 0.0 {
        tuned.lipschitz_c = cal.implied_c;
    }
    Ok((Model::new(tuned)?, Some(cal)))
}

fn run_gap(config: &RunConfig, meta: &Metadata, out: &Path) -> Result<RunOutcome> {
    let (model, calibration) = calibrated_model(config, config.gap.calibrate, config.gap.calibration_samples, config.gap.seed)?;
    let grid = model.grid();
    let lipschitz = model.lipschitz_constant();
    let eta = model.eta();
    let threshold = squeeze::gap_threshold(lipschitz, config.gamma, eta);
    let cone = squeeze::find_gap(grid, threshold, config.gamma)?;
    let eta_reductions = [EtaReduction::Min, EtaReduction::Euclidean]
        .into_iter()
        .map(|r| {
            let e = r.reduce(config.nu, config.kappa);
            EtaReport {
                reduction: r,
                eta: e,
                threshold: squeeze::gap_threshold(lipschitz, config.gamma, e),
                beta_n: squeeze::beta_n(&cone, lipschitz, e),
            }
        })
        .collect();
    let report = GapReport {
        lipschitz_c: model.params().lipschitz_c,
        calibration,
        lipschitz,
        eta,
        threshold,
        beta_n: squeeze::beta_n(&cone, lipschitz, eta),
        cone,
        eta_reductions,
        radii: absorbing_radii(&model),
        norm_equivalence_constant: model.norm_equivalence_constant(),
    };
    let path = out.join("gap.json");
    output::write_file(&path, output::json_report(meta, &report)?.as_bytes())?;
    Ok(RunOutcome {
        exit_code: 0,
        artifacts: vec![path],
    })
}

#[derive(Serialize)]
struct PairVerdict {
    pair: usize,
    seed: u64,
    start: PairStart,
    entry_time: Option<f64>,
    worst_margin_after_entry: Option<f64>,
    worst_decay_ratio: Option<f64>,
    fitted_exponent: Option<f64>,
    invariance_passed: bool,
    decay_passed: bool,
}

#[derive(Serialize)]
struct SqueezeReport {
    calibration: Option<Calibration>,
    lipschitz: f64,
    eta: f64,
    beta_n: f64,
    cone: ConeSpec,
    invariance_passed: bool,
    decay_passed: bool,
    pairs: Vec<PairVerdict>,
}

/// Seeded jobs alternating inside/outside starts.
pub fn ensemble_jobs(count: usize, seed: u64) -> Vec<PairJob> {
    (0..count)
        .map(|i| PairJob {
            seed: seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
            start: if i % 2 == 0 { PairStart::Inside } else { PairStart::Outside },
        })
        .collect()
}

fn run_squeeze(config: &RunConfig, meta: &Metadata, out: &Path) -> Result<RunOutcome> {
    let sq = &config.squeeze;
    let (model, calibration) = calibrated_model(config, sq.calibrate, sq.calibration_samples, sq.seed)?;
    let lipschitz = model.lipschitz_constant();
    let eta = model.eta();
    let cone = match sq.cutoff_eigenvalue {
        Some(c) => ConeSpec::at_cutoff(model.grid(), c, config.gamma)
            .map_err(|e| AdmError::config("squeeze.cutoff_eigenvalue", e.to_string()))?,
        None => squeeze::find_min_gap_cutoff(model.grid(), lipschitz, config.gamma, eta)?,
    };
    let jobs = ensemble_jobs(sq.pairs, sq.seed);
    let rho = config.cutoff_radius;
    let results = squeeze::run_ensemble(
        &model,
        &cone,
        &jobs,
        sq.base_radius * rho,
        sq.perturbation * rho,
        &config.integrator,
        sq.system,
    )?;

    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for (i, (job, r)) in jobs.iter().zip(&results).enumerate() {
        for k in 0..r.times.len() {
            rows.push(vec![
                i.to_string(),
                output::format_real(r.times[k]),
                output::format_real(r.p_norms[k]),
                output::format_real(r.q_norms[k]),
                output::format_real(r.margins[k]),
            ]);
        }
        verdicts.push(PairVerdict {
            pair: i,
            seed: job.seed,
            start: job.start,
            entry_time: r.entry_time,
            worst_margin_after_entry: r.worst_margin_after_entry,
            worst_decay_ratio: r.worst_decay_ratio,
            fitted_exponent: r.fitted_exponent,
            invariance_passed: r.invariance_passed,
            decay_passed: r.decay_passed,
        });
    }
    let csv_path = out.join("squeeze.csv");
    let csv = output::table_csv(meta, &["pair", "t", "p_norm", "q_norm", "cone_margin"], &rows);
    output::write_file(&csv_path, csv.as_bytes())?;

    let report = SqueezeReport {
        calibration,
        lipschitz,
        eta,
        beta_n: squeeze::beta_n(&cone, lipschitz, eta),
        cone,
        invariance_passed: verdicts.iter().all(|v| v.invariance_passed),
        decay_passed: verdicts.iter().all(|v| v.decay_passed),
        pairs: verdicts,
    };
    let passed = report.invariance_passed && report.decay_passed;
    let json_path = out.join("verdict.json");
    output::write_file(&json_path, output::json_report(meta, &report)?.as_bytes())?;
    Ok(RunOutcome {
        exit_code: if passed { 0 } else { 1 },
        artifacts: vec![csv_path, json_path],
    })
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    suite: verify::SuiteReport,
}

fn run_verify(config: &RunConfig, meta: &Metadata, out: &Path) -> Result<RunOutcome> {
    let grid = config.grid()?;
    let v = &config.verify;
    let suite = verify::run_suite(&grid, &v.alphas, v.max_order, v.seed, v.samples)?;
    let report = VerifyReport {
        passed: suite.passed(),
        suite,
    };
    let path = out.join("verify.json");
    output::write_file(&path, output::json_report(meta, &report)?.as_bytes())?;
    Ok(RunOutcome {
        exit_code: if report.passed { 0 } else { 1 },
        artifacts: vec![path],
    })
}
