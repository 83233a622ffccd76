//! Seeded invariant checks shared by `verify-ops` and the test suites.
//!
//! Every check returns its worst observed residual; relative residuals are
//! normalized by the Cauchy–Schwarz product of the two operands.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::field::{SpectralField, SpectralScalar, SpectralVector};
use crate::grid::TorusGrid;
use crate::init;
use crate::model::{FilteredState, Model, ModelParams};
use crate::operators::{verify_deconvolution_properties, LemmaReport, MultiplierSpec};
use crate::oracle;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, worst: f64, tolerance: f64) -> Self {
        Check {
            name: name.to_string(),
            worst,
            tolerance,
            passed: worst.is_finite() && worst <= tolerance,
        }
    }
}

/// Relative `|Σ|v̂|² − mean(v²)|` over random retained-band fields.
pub fn parseval_residual(grid: &TorusGrid, rng: &mut ChaCha8Rng, samples: usize) -> f64 {
    (0..samples)
        .map(|_| {
            let f = init::random_scalar(grid, rng, 1.0, f64::INFINITY);
            let spectral = f.norm(0.0).powi(2);
            let s = f.to_samples();
            let physical = s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64;
            ((spectral - physical) / spectral).abs()
        })
        .fold(0.0, f64::max)
}

/// Relative sample error of `inverse(forward(s))` for zero-mean white noise.
pub fn round_trip_residual(grid: &TorusGrid, rng: &mut ChaCha8Rng, samples: usize) -> f64 {
    use rand::Rng;
    (0..samples)
        .map(|_| {
            let mut s: Vec<f64> = (0..grid.sample_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            s.iter_mut().for_each(|x| *x -= mean);
            let back = SpectralScalar::from_samples(grid, &s).expect("sizes match").to_samples();
            let scale = s.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            s.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
        })
        .fold(0.0, f64::max)
}

/// `|⟨P_σv, v − P_σv⟩|`, relative, for random non-solenoidal `v`.
pub fn projection_residual(grid: &TorusGrid, rng: &mut ChaCha8Rng, samples: usize) -> f64 {
    (0..samples)
        .map(|_| {
            let v = SpectralVector::new(
                init::random_scalar(grid, rng, 1.0, f64::INFINITY),
                init::random_scalar(grid, rng, 1.0, f64::INFINITY),
            )
            .expect("same grid");
            let p = v.leray_project();
            let rest = &v - &p;
            let denom = (p.norm(0.0) * rest.norm(0.0)).max(f64::MIN_POSITIVE);
            p.inner(&rest, 0.0).expect("same grid").abs() / denom
        })
        .fold(0.0, f64::max)
}

/// `max |T_{c₁}T_{c₂}f − T_{min(c₁,c₂)}f|` over a sweep of cutoffs.
pub fn truncation_residual(grid: &TorusGrid, rng: &mut ChaCha8Rng) -> f64 {
    let f = init::random_scalar(grid, rng, 0.0, f64::INFINITY);
    let cuts = [0.0, 1.0, 4.5, 5.0, 13.0, 50.0, f64::INFINITY];
    let mut worst: f64 = 0.0;
    for &a in &cuts {
        for &b in &cuts {
            let lhs = f.truncate(b).truncate(a);
            let rhs = f.truncate(a.min(b));
            worst = worst.max(lhs.max_abs_difference(&rhs));
        }
    }
    worst
}

/// Largest coefficient deviation between the fast nonlinearity and the
/// convolution oracle over `samples` seeded random states.
pub fn oracle_deviation(params: &ModelParams, seed: u64, samples: usize) -> Result<f64> {
    let grid = params.grid().clone();
    let model = Model::new(params.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let s = init::random_state(&grid, &mut rng, 0.0, f64::INFINITY, 1.0);
        let (r1, r2) = model.nonlinearity(&s);
        let (o1, o2) = oracle::direct_nonlinearity(&s, params)?;
        worst = worst.max(r1.max_abs_difference(&o1)).max(r2.max_abs_difference(&o2));
    }
    Ok(worst)
}

/// `|⟨G P_σ∇·(D_N w ⊗ D_N w), A²D_N w⟩|` and `|⟨D_N w·∇D_N ρ, D_N ρ⟩|`,
/// each relative to the product of the operand norms.
pub fn cancellation_residuals(model: &Model, filtered: &FilteredState) -> (f64, f64) {
    let u = filtered.w.scale_by(model.dn_table());
    let phi = filtered.rho.scale_by(model.dn_table());
    let (momentum, transport) = model.quadratic_terms(&u, &phi);
    let a = momentum.leray_project().scale_by(model.filter_table());
    let a2d: Vec<f64> = model
        .helmholtz_table()
        .iter()
        .zip(model.dn_table())
        .map(|(a, d)| a * a * d)
        .collect();
    let b = filtered.w.scale_by(&a2d);
    let rel = |x: f64, n1: f64, n2: f64| if n1 * n2 > 0.0 { x.abs() / (n1 * n2) } else { x.abs() };
    let first = rel(a.inner(&b, 0.0).expect("same grid"), a.norm(0.0), b.norm(0.0));
    let second = rel(transport.inner(&phi, 0.0).expect("same grid"), transport.norm(0.0), phi.norm(0.0));
    (first, second)
}

/// `max |rhs_filtered(G V) − G rhs_full(V)|` over random states.
pub fn filtered_consistency(model: &Model, rng: &mut ChaCha8Rng, samples: usize) -> f64 {
    let alpha = model.params().alpha;
    (0..samples)
        .map(|_| {
            let s = init::random_state(model.grid(), rng, 1.0, f64::INFINITY, 1.0);
            let lhs = model.rhs_filtered(&s.filtered(alpha));
            let full = model.rhs_full(&s);
            let rhs = FilteredState {
                w: full.v.scale_by(model.filter_table()),
                rho: full.theta.scale_by(model.filter_table()),
            };
            lhs.max_abs_difference(&rhs)
        })
        .fold(0.0, f64::max)
}

/// `max |A G f − f|` over random fields.
pub fn inverse_pair_residual(grid: &TorusGrid, alpha: f64, rng: &mut ChaCha8Rng, samples: usize) -> f64 {
    let g = MultiplierSpec::filter(alpha);
    let a = MultiplierSpec::helmholtz(alpha);
    (0..samples)
        .map(|_| {
            let f = init::random_scalar(grid, rng, 1.0, f64::INFINITY);
            a.apply(&g.apply(&f)).max_abs_difference(&f) / f.max_abs_coefficient()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub lemma: Vec<LemmaReport>,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.lemma.iter().all(LemmaReport::passed) && self.checks.iter().all(|c| c.passed)
    }
}

/// Deconvolution properties for each `α`, then the field and nonlinearity
/// invariants on `grid` and on an `8 × 8` oracle grid.
pub fn run_suite(grid: &TorusGrid, alphas: &[f64], max_order: usize, seed: u64, samples: usize) -> Result<SuiteReport> {
    let lemma = alphas
        .iter()
        .map(|&a| verify_deconvolution_properties(grid, a, max_order))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = samples.max(1);
    let mut checks = vec![
        Check::new("parseval", parseval_residual(grid, &mut rng, samples), 1e-10),
        Check::new("transform_round_trip", round_trip_residual(grid, &mut rng, samples), 1e-12),
        Check::new("projection_orthogonality", projection_residual(grid, &mut rng, samples), 1e-12),
        Check::new("truncation_composition", truncation_residual(grid, &mut rng), 0.0),
    ];
    for &alpha in alphas {
        checks.push(Check::new(
            &format!("helmholtz_inverts_filter(alpha={alpha})"),
            inverse_pair_residual(grid, alpha, &mut rng, samples),
            1e-12,
        ));
    }

    let alpha = alphas.first().copied().unwrap_or(1.0);
    let order = max_order.min(3);
    let forcing = init::random_scalar(grid, &mut rng, 1.0, 10.0 * grid.lambda1());
    let model = Model::new(ModelParams::new(forcing, 1.0, 0.5, alpha, order))?;
    checks.push(Check::new(
        "filtered_matches_full",
        filtered_consistency(&model, &mut rng, samples.min(5)),
        1e-12,
    ));
    let (mut c1, mut c2) = (0.0_f64, 0.0_f64);
    for _ in 0..samples {
        let s = init::random_state(grid, &mut rng, 1.0, f64::INFINITY, 1.0);
        let (a, b) = cancellation_residuals(&model, &s.filtered(alpha));
        c1 = c1.max(a);
        c2 = c2.max(b);
    }
    checks.push(Check::new("momentum_cancellation", c1, 1e-10));
    checks.push(Check::new("transport_skew_symmetry", c2, 1e-10));

    let small = TorusGrid::new(grid.side_length(), 8)?;
    let params = ModelParams::new(SpectralScalar::zeros(&small), 1.0, 1.0, alpha, order);
    checks.push(Check::new("oracle_equivalence", oracle_deviation(&params, seed, samples)?, 1e-12));

    Ok(SuiteReport { lemma, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn suite_passes_on_desk_grid() {
        let grid = TorusGrid::new(2.0 * PI, 32).unwrap();
        let report = run_suite(&grid, &[0.1, 1.0], 8, 0, 4).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(report.passed());
    }
}
