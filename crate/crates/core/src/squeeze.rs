//! Spectral projections, the cone, the gap search and two-trajectory
//! experiments for cone invariance and high-mode decay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{AdmError, Result};
use crate::field::SpectralVector;
use crate::grid::{Eigenvalue, TorusGrid};
use crate::init;
use crate::integrate::{IntegratorConfig, Stepper, System};
use crate::model::{Model, State};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeSpec {
    /// `λ_n`: largest eigenvalue kept by `P_n`.
    pub cutoff_eigenvalue: f64,
    /// `λ_{n+1}`: next distinct eigenvalue.
    pub next_eigenvalue: f64,
    /// Lattice points with `0 < |k|² ≤ λ_n`, per field family.
    pub lattice_points: usize,
    /// Real dimension of the range of `P_n` on `(v, ϑ)`: one solenoidal
    /// velocity direction and one scalar per lattice point.
    pub dimension: usize,
    pub gamma: f64,
}

impl ConeSpec {
    /// Cone whose cutoff is the distinct eigenvalue `cutoff` of the grid.
    pub fn at_cutoff(grid: &TorusGrid, cutoff: f64, gamma: f64) -> Result<Self> {
        let eigen = grid.enumerate_eigenvalues();
        let pos = eigen
            .iter()
            .position(|e| (e.ksq - cutoff).abs() <= 1e-9 * cutoff.max(1.0))
            .ok_or_else(|| AdmError::InvalidArgument(format!("{cutoff} is not an eigenvalue of the grid")))?;
        let next = eigen
            .get(pos + 1)
            .ok_or_else(|| AdmError::InvalidArgument(format!("{cutoff} is the largest retained eigenvalue")))?;
        Ok(cone_from(&eigen, pos, next.ksq, gamma))
    }

    /// Keeps `|k|² ≤ λ_n` with a relative slack for roundoff in `|k|²`.
    fn low_mask(&self, grid: &TorusGrid) -> Vec<f64> {
        let cut = self.cutoff_eigenvalue * (1.0 + 1e-12);
        grid.ksq().iter().map(|&k| if k <= cut { 1.0 } else { 0.0 }).collect()
    }

    fn high_mask(&self, grid: &TorusGrid) -> Vec<f64> {
        self.low_mask(grid).iter().map(|m| 1.0 - m).collect()
    }
}

fn cone_from(eigen: &[Eigenvalue], pos: usize, next: f64, gamma: f64) -> ConeSpec {
    let lattice_points: usize = eigen[..=pos].iter().map(|e| e.multiplicity).sum();
    ConeSpec {
        cutoff_eigenvalue: eigen[pos].ksq,
        next_eigenvalue: next,
        lattice_points,
        dimension: 2 * lattice_points,
        gamma,
    }
}

/// `P_n V`.
pub fn project_low(state: &State, cone: &ConeSpec) -> State {
    state.scale_all(&cone.low_mask(state.grid()))
}

/// `Q_n V = V − P_n V`.
pub fn project_high(state: &State, cone: &ConeSpec) -> State {
    state.scale_all(&cone.high_mask(state.grid()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConeTest {
    pub inside: bool,
    /// `γ‖D_N^{1/2}p‖ − ‖D_N^{1/2}q‖`.
    pub margin: f64,
    pub p_norm: f64,
    pub q_norm: f64,
}

/// Cone membership of the pair `(V₁, V₂)`.
pub fn cone_test(v1: &State, v2: &State, cone: &ConeSpec, model: &Model) -> ConeTest {
    let diff = v1 - v2;
    let p_norm = model.state_dn_norm(&project_low(&diff, cone));
    let q_norm = model.state_dn_norm(&project_high(&diff, cone));
    let margin = cone.gamma * p_norm - q_norm;
    ConeTest {
        inside: margin >= 0.0,
        margin,
        p_norm,
        q_norm,
    }
}

/// `𝓛(γ+1)²/(ηγ)`.
pub fn gap_threshold(lipschitz: f64, gamma: f64, eta: f64) -> f64 {
    lipschitz * (gamma + 1.0).powi(2) / (eta * gamma)
}

/// First consecutive pair of distinct eigenvalues with `λ_{n+1} − λ_n`
/// strictly above `threshold`.
pub fn find_gap(grid: &TorusGrid, threshold: f64, gamma: f64) -> Result<ConeSpec> {
    let eigen = grid.enumerate_eigenvalues();
    let mut largest = (f64::NEG_INFINITY, 0.0, 0.0);
    for pos in 0..eigen.len().saturating_sub(1) {
        let gap = eigen[pos + 1].ksq - eigen[pos].ksq;
        if gap > threshold {
            return Ok(cone_from(&eigen, pos, eigen[pos + 1].ksq, gamma));
        }
        if gap > largest.0 {
            largest = (gap, eigen[pos].ksq, eigen[pos + 1].ksq);
        }
    }
    Err(AdmError::NoQualifyingGap {
        threshold,
        largest_gap: largest.0.max(0.0),
        lower: largest.1,
        upper: largest.2,
    })
}

/// Smallest cutoff satisfying the gap condition `λ_{n+1} − λ_n > 𝓛(γ+1)²/(ηγ)`.
pub fn find_min_gap_cutoff(grid: &TorusGrid, lipschitz: f64, gamma: f64, eta: f64) -> Result<ConeSpec> {
    find_gap(grid, gap_threshold(lipschitz, gamma, eta), gamma)
}

/// `β_n = λ_{n+1}η − 𝓛(1/γ + 1)`.
pub fn beta_n(cone: &ConeSpec, lipschitz: f64, eta: f64) -> f64 {
    cone.next_eigenvalue * eta - lipschitz * (1.0 / cone.gamma + 1.0)
}

/// Absolute slack on the cone margin when judging invariance.
pub const MARGIN_TOLERANCE: f64 = 1e-8;
/// Multiplicative slack on the decay envelope.
pub const DECAY_TOLERANCE: f64 = 1e-2;

#[derive(Clone, Debug, Serialize)]
pub struct PairExperimentResult {
    pub times: Vec<f64>,
    pub p_norms: Vec<f64>,
    pub q_norms: Vec<f64>,
    pub margins: Vec<f64>,
    pub lipschitz: f64,
    pub eta: f64,
    pub beta_n: f64,
    /// Log-linear slope of `−ln‖D_N^{1/2}q‖` over the first outside-cone segment.
    pub fitted_exponent: Option<f64>,
    /// Time of the first sample inside the cone.
    pub entry_time: Option<f64>,
    /// Most negative margin observed after entry.
    pub worst_margin_after_entry: Option<f64>,
    /// Largest `q(t) / (q(t_a) e^{−β_n (t − t_a)})` over outside segments starting at `t_a`.
    pub worst_decay_ratio: Option<f64>,
    pub invariance_passed: bool,
    pub decay_passed: bool,
}

impl PairExperimentResult {
    pub fn passed(&self) -> bool {
        self.invariance_passed && self.decay_passed
    }

    /// Maximal runs of consecutive outside-cone samples, as index ranges.
    pub fn outside_segments(&self) -> Vec<std::ops::Range<usize>> {
        let mut segments = Vec::new();
        let mut start = None;
        for (i, &m) in self.margins.iter().enumerate() {
            match (m < 0.0, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    segments.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            segments.push(s..self.margins.len());
        }
        segments
    }
}

/// Co-evolves two trajectories with identical steps and judges cone
/// invariance and high-mode decay.
pub fn run_pair_experiment(
    v1: &State,
    v2: &State,
    model: &Model,
    cone: &ConeSpec,
    config: &IntegratorConfig,
    system: System,
) -> Result<PairExperimentResult> {
    config.validate()?;
    let stepper = Stepper::new(model, config.dt, config.scheme, system);
    let lipschitz = model.lipschitz_constant();
    let eta = model.eta();
    let beta = beta_n(cone, lipschitz, eta);

    let mut result = PairExperimentResult {
        times: Vec::new(),
        p_norms: Vec::new(),
        q_norms: Vec::new(),
        margins: Vec::new(),
        lipschitz,
        eta,
        beta_n: beta,
        fitted_exponent: None,
        entry_time: None,
        worst_margin_after_entry: None,
        worst_decay_ratio: None,
        invariance_passed: true,
        decay_passed: true,
    };
    let (mut a, mut b) = (v1.clone(), v2.clone());
    let steps = config.steps();
    for k in 0..=steps {
        let t = k as f64 * config.dt;
        if k % config.observer_stride == 0 || k == steps {
            let c = cone_test(&a, &b, cone, model);
            result.times.push(t);
            result.p_norms.push(c.p_norm);
            result.q_norms.push(c.q_norm);
            result.margins.push(c.margin);
        }
        if k < steps {
            a = stepper.step(&a, t)?;
            b = stepper.step(&b, t)?;
        }
    }
    judge(&mut result);
    Ok(result)
}

fn judge(r: &mut PairExperimentResult) {
    if let Some(first) = r.margins.iter().position(|&m| m >= 0.0) {
        r.entry_time = Some(r.times[first]);
        let worst = r.margins[first..].iter().cloned().fold(f64::INFINITY, f64::min);
        r.worst_margin_after_entry = Some(worst);
        r.invariance_passed = worst >= -MARGIN_TOLERANCE;
    }

    let segments = r.outside_segments();
    let mut worst_ratio: Option<f64> = None;
    for seg in &segments {
        let (t0, q0) = (r.times[seg.start], r.q_norms[seg.start]);
        for i in seg.clone() {
            let envelope = q0 * (-r.beta_n * (r.times[i] - t0)).exp();
            let ratio = if envelope > 0.0 {
                r.q_norms[i] / envelope
            } else if r.q_norms[i] == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            worst_ratio = Some(worst_ratio.map_or(ratio, |w| w.max(ratio)));
        }
    }
    r.worst_decay_ratio = worst_ratio;
    r.decay_passed = worst_ratio.is_none_or(|w| w <= 1.0 + DECAY_TOLERANCE);

    if let Some(seg) = segments.first() {
        let pts: Vec<(f64, f64)> = seg
            .clone()
            .filter(|&i| r.q_norms[i] > 0.0)
            .map(|i| (r.times[i], r.q_norms[i].ln()))
            .collect();
        r.fitted_exponent = regression_slope(&pts).map(|s| -s);
    }
}

/// Least-squares slope, `None` with fewer than two distinct abscissae.
fn regression_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// `ℛ(V) = (P_σℛ₁(V), ℛ₂(V))` as a state-shaped tangent.
fn nonlinearity_state(model: &Model, state: &State) -> State {
    let (v, theta) = model.nonlinearity(state);
    State { v, theta }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Calibration {
    /// Largest observed `‖ℛ(V₁) − ℛ(V₂)‖ / ‖V₁ − V₂‖`.
    pub ratio: f64,
    /// `ratio · λ₁ / ((N+1)^{3/2} ρ̃)`.
    pub implied_c: f64,
    /// Largest ratio among `(V, 0)` pairs.
    pub zero_pair_ratio: f64,
    pub pairs: usize,
}

/// Random state with `‖D_N^{1/2}V‖ = radius`.
fn state_with_dn_norm(model: &Model, rng: &mut ChaCha8Rng, radius: f64) -> State {
    let grid = model.grid();
    let slope = rng.gen_range(0.0..3.0);
    let band = grid.max_retained_ksq() * rng.gen_range(0.02..1.0);
    let s = init::random_state(grid, rng, slope, band.max(grid.lambda1()), 1.0);
    let n = model.state_dn_norm(&s);
    if n > 0.0 {
        &s * (radius / n)
    } else {
        s
    }
}

/// Empirical Lipschitz ratio of `ℛ` on the `ρ̃`-ball of `‖D_N^{1/2}·‖`.
///
/// Three pair families are drawn in rotation: nearby pairs `(V, V + εδ)`,
/// independent pairs, and `(V, 0)`.
pub fn calibrate_lipschitz(model: &Model, samples: usize, seed: u64) -> Result<Calibration> {
    if samples < 100 {
        return Err(AdmError::InvalidArgument(format!("calibration needs at least 100 samples, got {samples}")));
    }
    let rho = model.params().cutoff_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(samples);
    for i in 0..samples {
        let r1 = rho * rng.gen_range(0.05..1.0f64).sqrt();
        let a = state_with_dn_norm(model, &mut rng, r1);
        let b = match i % 3 {
            0 => {
                let eps = rho * 10f64.powf(rng.gen_range(-4.0..-1.0));
                let delta = state_with_dn_norm(model, &mut rng, eps);
                let b = &a + &delta;
                let n = model.state_dn_norm(&b);
                if n > rho {
                    &b * (rho / n)
                } else {
                    b
                }
            }
            1 => {
                let r2 = rho * rng.gen_range(0.05..1.0f64).sqrt();
                state_with_dn_norm(model, &mut rng, r2)
            }
            _ => State::zeros(model.grid()),
        };
        pairs.push((a, b, i % 3 == 2));
    }
    Ok(calibrate_on_pairs(model, &pairs))
}

/// Calibration over explicit pairs; the flag marks `(V, 0)` pairs.
/// Identical pairs are skipped.
pub fn calibrate_on_pairs(model: &Model, pairs: &[(State, State, bool)]) -> Calibration {
    let results: Vec<(f64, bool)> = pairs
        .iter()
        .filter_map(|(a, b, zero)| {
            let diff = (a - b).norm();
            if diff == 0.0 {
                return None;
            }
            let dr = (&nonlinearity_state(model, a) - &nonlinearity_state(model, b)).norm();
            Some((dr / diff, *zero))
        })
        .collect();
    let ratio = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let zero_pair_ratio = results.iter().filter(|r| r.1).map(|r| r.0).fold(0.0, f64::max);
    let p = model.params();
    let scale = ((p.order + 1) as f64).powf(1.5) * p.cutoff_radius / model.grid().lambda1();
    Calibration {
        ratio,
        implied_c: ratio / scale,
        zero_pair_ratio,
        pairs: results.len(),
    }
}

/// How an ensemble pair is seeded relative to the cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStart {
    /// Difference dominated by `P_n` modes.
    Inside,
    /// Difference dominated by `Q_n` modes.
    Outside,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairJob {
    pub seed: u64,
    pub start: PairStart,
}

/// Initial pair for a job: a base state of dense-norm `base_radius` and a
/// perturbation of norm `perturbation` whose `P_n`/`Q_n` split is drawn so
/// the pair starts on the requested side of the cone.
pub fn seeded_pair(
    model: &Model,
    cone: &ConeSpec,
    job: &PairJob,
    base_radius: f64,
    perturbation: f64,
) -> (State, State) {
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let base = state_with_dn_norm(model, &mut rng, base_radius);
    let grid = model.grid();
    let raw = init::random_state(grid, &mut rng, 0.0, f64::INFINITY, 1.0);
    let low = project_low(&raw, cone);
    let high = project_high(&raw, cone);
    let (ln, hn) = (model.state_dn_norm(&low), model.state_dn_norm(&high));
    // ratio of ‖q‖ to γ‖p‖ in the perturbation
    let ratio = match job.start {
        PairStart::Inside => rng.gen_range(0.1..0.8),
        PairStart::Outside => rng.gen_range(1.5..6.0),
    };
    let (wl, wh) = (1.0, ratio * cone.gamma);
    let delta = &(&low * (wl / ln.max(f64::MIN_POSITIVE))) + &(&high * (wh / hn.max(f64::MIN_POSITIVE)));
    let dn = model.state_dn_norm(&delta);
    let delta = &delta * (perturbation / dn);
    (base.clone(), &base + &delta)
}

/// Worker count from `ADM_THREADS`, when set to a positive integer.
pub fn thread_limit() -> Option<usize> {
    std::env::var("ADM_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs independent pair experiments concurrently, in job order.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    model: &Model,
    cone: &ConeSpec,
    jobs: &[PairJob],
    base_radius: f64,
    perturbation: f64,
    config: &IntegratorConfig,
    system: System,
) -> Result<Vec<PairExperimentResult>> {
    let work = || -> Result<Vec<PairExperimentResult>> {
        jobs.par_iter()
            .map(|job| {
                let (a, b) = seeded_pair(model, cone, job, base_radius, perturbation);
                run_pair_experiment(&a, &b, model, cone, config, system)
            })
            .collect()
    };
    match thread_limit() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AdmError::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// State with only the scalar mode `amplitude·cos(k·x)`.
pub fn scalar_mode_state(grid: &TorusGrid, k: (i64, i64), amplitude: f64) -> Result<State> {
    State::new(SpectralVector::zeros(grid), init::single_mode_scalar(grid, k, amplitude)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SpectralScalar;
    use crate::model::ModelParams;
    use std::f64::consts::PI;

    fn grid() -> TorusGrid {
        TorusGrid::new(2.0 * PI, 32).unwrap()
    }

    fn model(grid: &TorusGrid) -> Model {
        Model::new(ModelParams::new(SpectralScalar::zeros(grid), 1.0, 1.0, 1.0, 0)).unwrap()
    }

    #[test]
    fn gap_pairs() {
        let g = grid();
        let c = find_gap(&g, 2.5, 1.0).unwrap();
        assert_eq!((c.cutoff_eigenvalue, c.next_eigenvalue), (5.0, 8.0));
        let c = find_min_gap_cutoff(&g, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((c.cutoff_eigenvalue, c.next_eigenvalue), (20.0, 25.0));
        assert_eq!(c.lattice_points, 68);
        let c = find_gap(&g, 0.0, 1.0).unwrap();
        assert_eq!((c.cutoff_eigenvalue, c.next_eigenvalue), (1.0, 2.0));
        assert!(matches!(find_gap(&g, 1e6, 1.0), Err(AdmError::NoQualifyingGap { .. })));
    }

    #[test]
    fn beta_values() {
        let g = grid();
        let c = find_gap(&g, 2.5, 1.0).unwrap();
        assert_eq!(beta_n(&c, 1.0, 1.0), 6.0);
        assert_eq!(beta_n(&c, 0.0, 1.0), 8.0);
        let wide = ConeSpec { gamma: 1e12, ..c };
        assert!((beta_n(&wide, 1.0, 1.0) - 7.0).abs() < 1e-11);
    }

    #[test]
    fn projections_split_exactly() {
        let g = grid();
        let m = model(&g);
        let cone = ConeSpec::at_cutoff(&g, 5.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = init::random_state(&g, &mut rng, 1.0, f64::INFINITY, 1.0);
        let (p, q) = (project_low(&s, &cone), project_high(&s, &cone));
        assert_eq!((&p + &q).max_abs_difference(&s), 0.0);
        assert_eq!(project_low(&p, &cone).max_abs_difference(&p), 0.0);
        assert_eq!(project_high(&p, &cone).norm(), 0.0);
        let lhs = m.state_dn_norm(&s).powi(2);
        let rhs = m.state_dn_norm(&p).powi(2) + m.state_dn_norm(&q).powi(2);
        assert!((lhs - rhs).abs() < 1e-12 * lhs);

        let probe = scalar_mode_state(&g, (3, 0), 1.0).unwrap();
        assert_eq!(project_low(&probe, &cone).norm(), 0.0);
        let all = ConeSpec::at_cutoff(&g, g.enumerate_eigenvalues().iter().rev().nth(1).unwrap().ksq, 1.0).unwrap();
        let top = ConeSpec {
            cutoff_eigenvalue: f64::INFINITY,
            ..all
        };
        assert_eq!(project_high(&s, &top).norm(), 0.0);
    }

    #[test]
    fn cone_membership() {
        let g = grid();
        let m = model(&g);
        let cone = ConeSpec::at_cutoff(&g, 5.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = init::random_state(&g, &mut rng, 1.0, f64::INFINITY, 1.0);
        let same = cone_test(&s, &s, &cone, &m);
        assert!(same.inside && same.margin == 0.0);
        let low = &s + &scalar_mode_state(&g, (1, 2), 0.3).unwrap();
        assert!(cone_test(&low, &s, &cone, &m).inside);
        let high = &s + &scalar_mode_state(&g, (3, 0), 0.3).unwrap();
        assert!(!cone_test(&high, &s, &cone, &m).inside);
    }

    #[test]
    fn identical_pair_is_vacuous() {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        let m = model(&g);
        let cone = ConeSpec::at_cutoff(&g, 5.0, 1.0).unwrap();
        let s = init::random_state(&g, &mut ChaCha8Rng::seed_from_u64(1), 1.0, 20.0, 0.5);
        let cfg = IntegratorConfig::new(1e-3, 0.05);
        let r = run_pair_experiment(&s, &s, &m, &cone, &cfg, System::Prepared).unwrap();
        assert!(r.q_norms.iter().all(|&q| q == 0.0));
        assert!(r.passed());
    }

    #[test]
    fn regression_recovers_slope() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 - 2.5 * i as f64)).collect();
        assert!((regression_slope(&pts).unwrap() + 2.5).abs() < 1e-12);
        assert!(regression_slope(&pts[..1]).is_none());
    }

    #[test]
    fn zero_samples_calibrate_to_zero() {
        let g = TorusGrid::new(2.0 * PI, 16).unwrap();
        let m = model(&g);
        let z = State::zeros(&g);
        let cal = calibrate_on_pairs(&m, &[(z.clone(), z.clone(), true), (z.clone(), z, false)]);
        assert_eq!(cal.ratio, 0.0);
        assert_eq!(cal.pairs, 0);
    }
}
