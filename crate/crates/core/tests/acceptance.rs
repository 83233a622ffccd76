use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use adm_core::diagnostics::detect_entry_time;
use adm_core::init;
use adm_core::io::config::{parse_config, Experiment};
use adm_core::io::run::{ensemble_jobs, run};
use adm_core::operators::{convergence_residuals, deconvolution_closed_form, verify_deconvolution_properties, MultiplierSpec};
use adm_core::squeeze::{self, calibrate_lipschitz, find_min_gap_cutoff};
use adm_core::verify::{cancellation_residuals, oracle_deviation};
use adm_core::{IntegratorConfig, Model, ModelParams, Scheme, SpectralScalar, State, Stepper, System, TorusGrid};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn desk_grid(m: usize) -> TorusGrid {
    TorusGrid::new(2.0 * PI, m).unwrap()
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn ac1() -> Verdict {
    let start = Instant::now();
    let grid = desk_grid(32);
    let mut ok = true;
    let mut notes = Vec::new();
    for alpha in [0.1, 1.0] {
        let report = verify_deconvolution_properties(&grid, alpha, 8);
        ok &= report.passed();
        let worst: Vec<String> = report.checks.iter().map(|c| format!("{}={:.1e}", c.name, c.worst)).collect();
        notes.push(format!("alpha={alpha}: {}", worst.join(" ")));

        // bounds straight from the symbol tables
        for order in 0..=8 {
            let table = MultiplierSpec::deconvolution(alpha, order).table(&grid);
            for (i, &d) in table.iter().enumerate() {
                let ksq = grid.ksq()[i];
                if ksq == 0.0 || !grid.retained()[i] {
                    continue;
                }
                let cap = ((order + 1) as f64).min(1.0 + alpha * alpha * ksq);
                ok &= (1.0..=cap).contains(&d);
            }
        }
        let res = convergence_residuals(&grid, alpha, 8);
        ok &= res.windows(2).all(|w| w[1] < w[0]);
        for order in 0..=8 {
            let limit = deconvolution_closed_form(1.0, order, 1e4);
            ok &= ((limit - (order + 1) as f64) / (order + 1) as f64).abs() < 0.01;
        }
    }
    let elapsed = start.elapsed();
    ok &= within(elapsed, 5);
    verdict(ok, format!("{} ({:.2?})", notes.join("; "), elapsed))
}

fn ac2() -> Verdict {
    let start = Instant::now();
    let grid = desk_grid(8);
    let mut worst: f64 = 0.0;
    for (alpha, order) in [(1.0, 0), (0.5, 3)] {
        let params = ModelParams::new(SpectralScalar::zeros(&grid), 1.0, 1.0, alpha, order);
        worst = worst.max(oracle_deviation(&params, 2024, 50).unwrap());
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-12 && within(elapsed, 10),
        format!("max deviation {worst:.2e} over 50 states ({elapsed:.2?})"),
    )
}

fn ac3() -> Verdict {
    let start = Instant::now();
    let grid = desk_grid(64);
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let model = Model::new(ModelParams::new(SpectralScalar::zeros(&grid), 1.0, 0.5, 1.0, 3)).unwrap();
    let (mut c1, mut c2) = (0.0_f64, 0.0_f64);
    for i in 0..20 {
        let amplitude = 10f64.powi(i % 5 - 2);
        let s = init::random_state(&grid, &mut rng, 1.0, f64::INFINITY, amplitude);
        let (a, b) = cancellation_residuals(&model, &s.filtered(1.0));
        c1 = c1.max(a);
        c2 = c2.max(b);
    }
    let elapsed = start.elapsed();
    verdict(
        c1 < 1e-10 && c2 < 1e-10 && within(elapsed, 30),
        format!("momentum {c1:.2e}, transport {c2:.2e} (normalized) ({elapsed:.2?})"),
    )
}

fn gronwall_config(nu: f64, kappa: f64, order: usize) -> String {
    format!(
        "experiment = simulate
grid.L = 2pi
grid.M = 64
params.nu = {nu}
params.kappa = {kappa}
params.alpha = 1
params.N = {order}
integrator.dt = 1e-3
integrator.t_end = 20
integrator.observer_stride = 10
initial.kind = random_band
initial.seed = 3
initial.amplitude = 4
initial.max_ksq = 20
forcing.kind = single_mode
forcing.k = 1,0
forcing.amplitude = 1
forcing.applies_to = g
output.final_snapshot = false
"
    )
}

fn run_simulate(text: &str, out: &Path) -> (Vec<Vec<Option<f64>>>, serde_json::Value) {
    let cfg = parse_config(text).unwrap();
    let outcome = run(&cfg, Some(Experiment::Simulate), out).unwrap();
    assert_eq!(outcome.exit_code, 0);
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let rows = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse::<f64>().ok()).collect())
        .collect();
    let summary = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    (rows, summary)
}

fn ac4() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (nu, kappa) in [(1.0, 1.0), (1.0, 0.5)] {
        for order in [0, 3] {
            let dir = tempfile::tempdir().unwrap();
            let start = Instant::now();
            let (rows, summary) = run_simulate(&gronwall_config(nu, kappa, order), dir.path());
            let elapsed = start.elapsed();
            // columns: t, y, z, Y, Z, R1sq, R2sq, ...
            let mut y_excess = f64::NEG_INFINITY;
            let mut z_excess = f64::NEG_INFINITY;
            for r in &rows {
                let (y, z) = (r[1].unwrap(), r[2].unwrap());
                y_excess = y_excess.max(y - r[5].unwrap());
                z_excess = z_excess.max(z - r[6].unwrap());
            }
            let r1sq = summary["radii"]["r1sq"].as_f64().unwrap();
            let series: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].unwrap(), r[1].unwrap())).collect();
            let t_r = detect_entry_time(&series, r1sq).unwrap();
            let mut case_ok = y_excess <= 1e-6 && z_excess <= 1e-6 && t_r.is_some_and(f64::is_finite) && within(elapsed, 120);
            if kappa == 1.0 && order == 0 {
                case_ok &= (r1sq - 2.0).abs() < 1e-12;
            }
            ok &= case_ok;
            notes.push(format!(
                "nu={nu} kappa={kappa} N={order}: y-R1^2<={y_excess:.1e} z-R2^2<={z_excess:.1e} r1^2={r1sq:.4} t_r={} ({elapsed:.1?})",
                t_r.map_or("none".into(), |t| format!("{t:.2}"))
            ));
        }
    }
    verdict(ok, notes.join("; "))
}

fn ac5() -> Verdict {
    let start = Instant::now();
    let grid = desk_grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let forcing = init::random_scalar(&grid, &mut rng, 1.0, 10.0);
    let mut params = ModelParams::new(&forcing * 0.05, 1.0, 0.5, 1.0, 2);
    params.cutoff_radius = 1.0;
    let model = Model::new(params).unwrap();
    let dt = 1e-3;
    let full = Stepper::new(&model, dt, Scheme::IfRk2, System::Full);
    let prepared = Stepper::new(&model, dt, Scheme::IfRk2, System::Prepared);

    // small data: identical trajectories while inside the ball
    let s0 = init::random_state(&grid, &mut rng, 1.0, f64::INFINITY, 1.0);
    let s0 = &s0 * (0.5 / model.state_dn_norm(&s0));
    let (mut a, mut b) = (s0.clone(), s0);
    let mut small_dev: f64 = 0.0;
    let mut max_norm: f64 = 0.0;
    for k in 0..1000 {
        let t = k as f64 * dt;
        a = full.step(&a, t).unwrap();
        b = prepared.step(&b, t).unwrap();
        small_dev = small_dev.max(a.max_abs_difference(&b));
        max_norm = max_norm.max(model.state_dn_norm(&b));
    }

    // large data: pure diffusion while the cutoff vanishes
    let l0 = init::random_state(&grid, &mut rng, 1.0, f64::INFINITY, 1.0);
    let l0 = &l0 * (4.0 / model.state_dn_norm(&l0));
    let mut l = l0.clone();
    let mut steps = 0;
    while steps < 50 && model.chi(&l) == 0.0 {
        l = prepared.step(&l, steps as f64 * dt).unwrap();
        steps += 1;
    }
    let t = steps as f64 * dt;
    let (nu, kappa) = (1.0, 0.5);
    let ksq = grid.ksq();
    let mut rate_dev: f64 = 0.0;
    let fields = [
        (l0.v.component(0), l.v.component(0), nu),
        (l0.v.component(1), l.v.component(1), nu),
        (&l0.theta, &l.theta, kappa),
    ];
    for (before, after, diff) in fields {
        let scale = before.max_abs_coefficient();
        for (i, (c0, c1)) in before.coefficients().iter().zip(after.coefficients()).enumerate() {
            if c0.norm() > 1e-6 * scale {
                let rate = -(c1.norm() / c0.norm()).ln() / t;
                rate_dev = rate_dev.max((rate - diff * ksq[i]).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        small_dev <= 1e-12 && max_norm <= 1.0 && steps > 0 && rate_dev <= 1e-10 && within(elapsed, 60),
        format!(
            "small-data deviation {small_dev:.1e} (max norm {max_norm:.3}); large-data rate deviation {rate_dev:.1e} over {steps} steps ({elapsed:.2?})"
        ),
    )
}

fn lattice_points_up_to(bound: i64) -> usize {
    let mut n = 0;
    for a in -bound..=bound {
        for b in -bound..=bound {
            let s = a * a + b * b;
            if s > 0 && s <= bound {
                n += 1;
            }
        }
    }
    n
}

fn ac6() -> Verdict {
    let start = Instant::now();
    let grid = desk_grid(32);
    let mut ok = true;
    let mut notes = Vec::new();

    // threshold 𝓛(γ+1)²/(ηγ) with γ = η = 1 equals 4𝓛
    let low = find_min_gap_cutoff(&grid, 2.5 / 4.0, 1.0, 1.0).unwrap();
    let high = find_min_gap_cutoff(&grid, 1.0, 1.0, 1.0).unwrap();
    ok &= (low.cutoff_eigenvalue, low.next_eigenvalue) == (5.0, 8.0);
    ok &= (high.cutoff_eigenvalue, high.next_eigenvalue) == (20.0, 25.0);
    ok &= high.lattice_points == 68 && high.lattice_points == lattice_points_up_to(20);
    notes.push(format!(
        "gaps ({},{}) and ({},{}) with {} modes",
        low.cutoff_eigenvalue, low.next_eigenvalue, high.cutoff_eigenvalue, high.next_eigenvalue, high.lattice_points
    ));

    // ρ̃ chosen so the calibrated 𝓛 is near 1
    let base = |rho: f64, c: f64| {
        let mut p = ModelParams::new(SpectralScalar::zeros(&grid), 1.0, 1.0, 1.0, 0);
        p.cutoff_radius = rho;
        p.lipschitz_c = c;
        p.gamma = 1.0;
        Model::new(p).unwrap()
    };
    let probe = calibrate_lipschitz(&base(1.0, 1.0), 200, 6).unwrap();
    let rho = 1.0 / probe.ratio;
    let cal = calibrate_lipschitz(&base(rho, 1.0), 200, 6).unwrap();
    let model = base(rho, cal.implied_c);
    let lip = model.lipschitz_constant();
    let cone = match find_min_gap_cutoff(&grid, lip, 1.0, model.eta()) {
        Ok(c) => c,
        Err(e) => return verdict(false, format!("{} ; no gap for calibrated L={lip:.3}: {e}", notes.join("; "))),
    };
    let config = IntegratorConfig {
        dt: 1e-3,
        t_end: 1.0,
        scheme: Scheme::IfRk2,
        observer_stride: 10,
    };
    let jobs = ensemble_jobs(20, 6);
    let results = squeeze::run_ensemble(&model, &cone, &jobs, 0.5 * rho, 0.2 * rho, &config, System::Prepared).unwrap();
    let invariance = results.iter().all(|r| r.invariance_passed);
    let decay = results.iter().all(|r| r.decay_passed);
    let worst_margin = results
        .iter()
        .filter_map(|r| r.worst_margin_after_entry)
        .fold(f64::INFINITY, f64::min);
    let worst_ratio = results.iter().filter_map(|r| r.worst_decay_ratio).fold(0.0, f64::max);
    ok &= invariance && decay;
    let elapsed = start.elapsed();
    ok &= within(elapsed, 300);
    notes.push(format!(
        "rho={rho:.3} L={lip:.3} cone ({},{}) beta_n={:.3}; invariance {} (worst margin {worst_margin:.2e}), decay {} (worst ratio {worst_ratio:.4}) ({elapsed:.1?})",
        cone.cutoff_eigenvalue,
        cone.next_eigenvalue,
        squeeze::beta_n(&cone, lip, model.eta()),
        invariance,
        decay
    ));
    verdict(ok, notes.join("; "))
}

fn ac7() -> Verdict {
    let start = Instant::now();
    let grid = desk_grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let forcing = init::random_scalar(&grid, &mut rng, 1.0, 10.0);
    let model = Model::new(ModelParams::new(forcing, 0.05, 0.05, 1.0, 1)).unwrap();
    let s0 = init::random_state(&grid, &mut rng, 1.0, 50.0, 1.0);
    let t_end = 0.5;
    let integrate = |dt: f64| -> State {
        let stepper = Stepper::new(&model, dt, Scheme::IfRk2, System::Full);
        let n = (t_end / dt).round() as usize;
        let mut s = s0.clone();
        for k in 0..n {
            s = stepper.step(&s, k as f64 * dt).unwrap();
        }
        s
    };
    let dt = 0.01;
    let reference = integrate(dt / 8.0);
    let e1 = integrate(dt).max_abs_difference(&reference);
    let e2 = integrate(dt / 2.0).max_abs_difference(&reference);
    let order = (e1 / e2).log2();
    let elapsed = start.elapsed();
    verdict(
        (1.8..=2.2).contains(&order) && within(elapsed, 60),
        format!("errors {e1:.2e}, {e2:.2e}; observed order {order:.3} ({elapsed:.2?})"),
    )
}

fn ac8() -> Verdict {
    let text = gronwall_config(1.0, 1.0, 0);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let cfg = parse_config(&text).unwrap();
        run(&cfg, None, dir.path()).unwrap();
    }
    let x = std::fs::read(a.path().join("diagnostics.csv")).unwrap();
    let y = std::fs::read(b.path().join("diagnostics.csv")).unwrap();
    let sx = std::fs::read(a.path().join("summary.json")).unwrap();
    let sy = std::fs::read(b.path().join("summary.json")).unwrap();
    verdict(
        x == y && sx == sy && !x.is_empty(),
        format!("diagnostics.csv {} bytes, identical: {}", x.len(), x == y),
    )
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 8] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let v = check();
        println!("{} {name} {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        if !v.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
