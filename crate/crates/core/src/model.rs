//! Right-hand sides of the approximate-deconvolution Boussinesq model.
//!
//! The state is `V = (v, ϑ)`, the unfiltered variables; the filtered pair is
//! `(w, ρ) = (G_α v, G_α ϑ)`. In unfiltered form
//!
//! ```text
//! ∂_t v = −νΛ²v − P_σ ∇·(D_N v̄ ⊗ D_N v̄) + P_σ(ϑ e₂)
//! ∂_t ϑ = −κΛ²ϑ − ∇·(D_N ϑ̄ D_N v̄) + f
//! ```
//!
//! Pressure is removed by the Leray projection. Quadratic products are
//! formed on the grid from two-thirds-truncated inputs and truncated again,
//! which makes them exact on retained modes.

use std::ops::{Add, Mul, Sub};

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{AdmError, Result};
use crate::field::{SpectralField, SpectralScalar, SpectralVector};
use crate::grid::TorusGrid;
use crate::operators::MultiplierSpec;

/// Unfiltered velocity and scalar `(v, ϑ)`.
#[derive(Clone, Debug)]
pub struct State {
    pub v: SpectralVector,
    pub theta: SpectralScalar,
}

impl State {
    /// Pairs a velocity and a scalar. The velocity must be divergence-free;
    /// it is re-projected so the solenoidal flag is set.
    pub fn new(v: SpectralVector, theta: SpectralScalar) -> Result<Self> {
        if v.grid() != theta.grid() {
            return Err(AdmError::GridMismatch);
        }
        let div = v.max_divergence();
        let scale = v.max_abs_coefficient().max(1.0);
        if div > 1e-10 * scale * v.grid().max_retained_wavenumber().max(1.0) {
            return Err(AdmError::InvalidArgument(format!(
                "velocity is not divergence-free: max |k·v̂_k| = {div:e}"
            )));
        }
        Ok(State {
            v: v.leray_project(),
            theta,
        })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        State {
            v: SpectralVector::zeros(grid),
            theta: SpectralScalar::zeros(grid),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.theta.grid()
    }

    /// Plain `L²` coefficient norm of `(v, ϑ)`.
    pub fn norm(&self) -> f64 {
        (self.v.norm(0.0).powi(2) + self.theta.norm(0.0).powi(2)).sqrt()
    }

    /// `sqrt(Σ table_k (|v̂_k|² + |ϑ̂_k|²))`.
    pub fn weighted_norm(&self, table: &[f64]) -> f64 {
        let v = self.v.weighted_inner(&self.v, table).unwrap_or(0.0);
        let t = self.theta.weighted_inner(&self.theta, table).unwrap_or(0.0);
        (v + t).max(0.0).sqrt()
    }

    /// Multiplies the velocity by `velocity[idx]` and the scalar by `scalar[idx]`.
    pub fn scale_by(&self, velocity: &[f64], scalar: &[f64]) -> State {
        State {
            v: self.v.scale_by(velocity),
            theta: self.theta.scale_by(scalar),
        }
    }

    /// Same multiplier on every component.
    pub fn scale_all(&self, table: &[f64]) -> State {
        self.scale_by(table, table)
    }

    pub fn max_abs_difference(&self, other: &State) -> f64 {
        self.v
            .max_abs_difference(&other.v)
            .max(self.theta.max_abs_difference(&other.theta))
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.theta.is_finite()
    }

    /// `(w, ρ) = (G_α v, G_α ϑ)`.
    pub fn filtered(&self, alpha: f64) -> FilteredState {
        let g = MultiplierSpec::filter(alpha).table(self.grid());
        FilteredState {
            w: self.v.scale_by(&g),
            rho: self.theta.scale_by(&g),
        }
    }

    pub(crate) fn reproject(self) -> State {
        State {
            v: self.v.leray_project(),
            theta: self.theta,
        }
    }
}

impl Add for &State {
    type Output = State;
    fn add(self, rhs: &State) -> State {
        State {
            v: &self.v + &rhs.v,
            theta: &self.theta + &rhs.theta,
        }
    }
}

impl Sub for &State {
    type Output = State;
    fn sub(self, rhs: &State) -> State {
        State {
            v: &self.v - &rhs.v,
            theta: &self.theta - &rhs.theta,
        }
    }
}

impl Mul<f64> for &State {
    type Output = State;
    fn mul(self, rhs: f64) -> State {
        State {
            v: &self.v * rhs,
            theta: &self.theta * rhs,
        }
    }
}

/// Filtered pair `(w, ρ)`.
#[derive(Clone, Debug)]
pub struct FilteredState {
    pub w: SpectralVector,
    pub rho: SpectralScalar,
}

impl FilteredState {
    /// `(v, ϑ) = (A w, A ρ)`.
    pub fn unfiltered(&self, alpha: f64) -> State {
        let a = MultiplierSpec::helmholtz(alpha).table(self.rho.grid());
        State {
            v: self.w.scale_by(&a),
            theta: self.rho.scale_by(&a),
        }
    }

    pub fn max_abs_difference(&self, other: &FilteredState) -> f64 {
        self.w
            .max_abs_difference(&other.w)
            .max(self.rho.max_abs_difference(&other.rho))
    }
}

/// How the viscosity triple `η = (ν, ν, κ)` is reduced to one rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaReduction {
    /// `min(ν, κ)`, the rigorous dissipation lower bound.
    #[default]
    Min,
    /// `|η| = sqrt(2ν² + κ²)`.
    Euclidean,
}

impl EtaReduction {
    pub fn reduce(self, nu: f64, kappa: f64) -> f64 {
        match self {
            EtaReduction::Min => nu.min(kappa),
            EtaReduction::Euclidean => (2.0 * nu * nu + kappa * kappa).sqrt(),
        }
    }
}

/// Physical and analysis parameters.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub nu: f64,
    pub kappa: f64,
    /// Filter width `α`.
    pub alpha: f64,
    /// Deconvolution order `N`.
    pub order: usize,
    /// Time-independent scalar forcing `f` (the filtered forcing is `g = G_α f`).
    pub forcing: SpectralScalar,
    /// Cutoff radius `ρ̃` of the prepared system.
    pub cutoff_radius: f64,
    /// Cone aperture `γ`.
    pub gamma: f64,
    /// Generic constant `c` in `𝓛 = c λ₁⁻¹ (N+1)^{3/2} ρ̃`.
    pub lipschitz_c: f64,
    /// Ladyzhenskaya constant `c₄` in the second-level radius.
    pub c4: f64,
    pub eta_reduction: EtaReduction,
}

impl ModelParams {
    /// Parameters with defaults `ρ̃ = γ = c = c₄ = 1` and `η = min(ν, κ)`.
    pub fn new(forcing: SpectralScalar, nu: f64, kappa: f64, alpha: f64, order: usize) -> Self {
        ModelParams {
            nu,
            kappa,
            alpha,
            order,
            forcing,
            cutoff_radius: 1.0,
            gamma: 1.0,
            lipschitz_c: 1.0,
            c4: 1.0,
            eta_reduction: EtaReduction::Min,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.forcing.grid()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nu", self.nu),
            ("kappa", self.kappa),
            ("alpha", self.alpha),
            ("cutoff_radius", self.cutoff_radius),
            ("gamma", self.gamma),
            ("lipschitz_c", self.lipschitz_c),
            ("c4", self.c4),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(AdmError::InvalidArgument(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }
}

/// Smooth cutoff `χ(r/ρ̃)` with `χ = 1` on `[0, 1]`, `0` on `[2, ∞)` and
/// `(1 + cos(π(s − 1)))/2` in between; `|χ'| ≤ π/2`.
pub fn cutoff_chi(r: f64, rho_tilde: f64) -> f64 {
    let s = r / rho_tilde;
    if s <= 1.0 {
        1.0
    } else if s >= 2.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (s - 1.0)).cos())
    }
}

/// Label of the cutoff profile, recorded in output metadata.
pub const CUTOFF_PROFILE: &str = "cosine: chi(s)=1 for s<=1, (1+cos(pi(s-1)))/2 for 1<s<2, 0 for s>=2";

/// The model bound to a grid, with its multiplier tables precomputed.
#[derive(Clone, Debug)]
pub struct Model {
    params: ModelParams,
    grid: TorusGrid,
    /// `D_N G_α`: maps `v` to the advecting field `D_N v̄`.
    dn_filter: Vec<f64>,
    dn: Vec<f64>,
    filter: Vec<f64>,
    helmholtz: Vec<f64>,
    dealias: Vec<f64>,
    neg_nu_ksq: Vec<f64>,
    neg_kappa_ksq: Vec<f64>,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let grid = params.grid().clone();
        let dn_spec = MultiplierSpec::deconvolution(params.alpha, params.order);
        let dn = dn_spec.table(&grid);
        let filter = MultiplierSpec::filter(params.alpha).table(&grid);
        let dn_filter = dn.iter().zip(&filter).map(|(d, g)| d * g).collect();
        let helmholtz = MultiplierSpec::helmholtz(params.alpha).table(&grid);
        let dealias = grid.retained().iter().map(|&r| if r { 1.0 } else { 0.0 }).collect();
        let neg_nu_ksq = grid.ksq().iter().map(|k| -params.nu * k).collect();
        let neg_kappa_ksq = grid.ksq().iter().map(|k| -params.kappa * k).collect();
        Ok(Model {
            params,
            grid,
            dn_filter,
            dn,
            filter,
            helmholtz,
            dealias,
            neg_nu_ksq,
            neg_kappa_ksq,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// `D̂_N` over the half spectrum.
    pub fn dn_table(&self) -> &[f64] {
        &self.dn
    }

    /// `1/(1 + α²|k|²)` over the half spectrum.
    pub fn filter_table(&self) -> &[f64] {
        &self.filter
    }

    /// `1 + α²|k|²` over the half spectrum.
    pub fn helmholtz_table(&self) -> &[f64] {
        &self.helmholtz
    }

    /// Filtered forcing `g = G_α f`.
    pub fn filtered_forcing(&self) -> SpectralScalar {
        self.params.forcing.scale_by(&self.filter)
    }

    /// Reduced viscosity `η` per the configured reduction.
    pub fn eta(&self) -> f64 {
        self.params.eta_reduction.reduce(self.params.nu, self.params.kappa)
    }

    /// The advecting velocity `D_N v̄`.
    pub fn advecting_velocity(&self, state: &State) -> SpectralVector {
        state.v.scale_by(&self.dn_filter)
    }

    /// Dealiased `(∇·(u ⊗ u), ∇·(φ u))`, before any projection.
    pub fn quadratic_terms(&self, u: &SpectralVector, phi: &SpectralScalar) -> (SpectralVector, SpectralScalar) {
        let transform = self.grid.transform();
        let u1 = transform.inverse(u.component(0).scale_by(&self.dealias).coefficients());
        let u2 = transform.inverse(u.component(1).scale_by(&self.dealias).coefficients());
        let p = transform.inverse(phi.scale_by(&self.dealias).coefficients());

        let product = |a: &[f64], b: &[f64]| -> Vec<Complex64> {
            let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
            transform.forward(&prod)
        };
        let t11 = product(&u1, &u1);
        let t12 = product(&u1, &u2);
        let t22 = product(&u2, &u2);
        let f1 = product(&p, &u1);
        let f2 = product(&p, &u2);

        let (k1, k2) = (self.grid.k1(), self.grid.k2());
        let n = self.grid.coeff_len();
        let mut m1 = Vec::with_capacity(n);
        let mut m2 = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        for i in 0..n {
            let keep = self.dealias[i];
            let (ik1, ik2) = (Complex64::new(0.0, k1[i] * keep), Complex64::new(0.0, k2[i] * keep));
            m1.push(ik1 * t11[i] + ik2 * t12[i]);
            m2.push(ik1 * t12[i] + ik2 * t22[i]);
            s.push(ik1 * f1[i] + ik2 * f2[i]);
        }
        let momentum = SpectralVector::with_flag(
            [
                SpectralScalar::from_raw(&self.grid, m1),
                SpectralScalar::from_raw(&self.grid, m2),
            ],
            false,
        );
        (momentum, SpectralScalar::from_raw(&self.grid, s))
    }

    /// `ℛ₁(V) = P_σ ∇·(D_N v̄ ⊗ D_N v̄)` and `ℛ₂(V) = ∇·(D_N ϑ̄ D_N v̄)`.
    pub fn nonlinearity(&self, state: &State) -> (SpectralVector, SpectralScalar) {
        let u = self.advecting_velocity(state);
        let phi = state.theta.scale_by(&self.dn_filter);
        let (m, s) = self.quadratic_terms(&u, &phi);
        (m.leray_project(), s)
    }

    pub fn r1(&self, state: &State) -> SpectralVector {
        self.nonlinearity(state).0
    }

    pub fn r2(&self, state: &State) -> SpectralScalar {
        self.nonlinearity(state).1
    }

    /// `P_σ(ϑ e₂)`.
    pub fn buoyancy(&self, theta: &SpectralScalar) -> SpectralVector {
        SpectralVector::with_flag([SpectralScalar::zeros(&self.grid), theta.clone()], false).leray_project()
    }

    /// `(−νΛ²v, −κΛ²ϑ)`.
    pub fn diffusion(&self, state: &State) -> State {
        state.scale_by(&self.neg_nu_ksq, &self.neg_kappa_ksq)
    }

    /// The non-stiff part `(−ℛ₁ + P_σ(ϑe₂), −ℛ₂ + f)`.
    pub fn explicit_terms(&self, state: &State) -> State {
        let (r1, r2) = self.nonlinearity(state);
        State {
            v: &self.buoyancy(&state.theta) - &r1,
            theta: &self.params.forcing - &r2,
        }
    }

    /// Full right-hand side in unfiltered variables.
    pub fn rhs_full(&self, state: &State) -> State {
        &self.diffusion(state) + &self.explicit_terms(state)
    }

    /// `‖D_N^{1/2} V‖`.
    pub fn state_dn_norm(&self, state: &State) -> f64 {
        state.weighted_norm(&self.dn)
    }

    /// `χ_ρ̃(‖D_N^{1/2} V‖)`.
    pub fn chi(&self, state: &State) -> f64 {
        cutoff_chi(self.state_dn_norm(state), self.params.cutoff_radius)
    }

    /// Right-hand side of the prepared system: diffusion plus the cut-off
    /// nonlinear and forcing terms.
    pub fn prepared_rhs(&self, state: &State) -> State {
        let chi = self.chi(state);
        &self.diffusion(state) + &(&self.explicit_terms(state) * chi)
    }

    /// Right-hand side in filtered variables `(w, ρ)`.
    pub fn rhs_filtered(&self, filtered: &FilteredState) -> FilteredState {
        let u = filtered.w.scale_by(&self.dn);
        let phi = filtered.rho.scale_by(&self.dn);
        let (m, s) = self.quadratic_terms(&u, &phi);
        let momentum = m.leray_project().scale_by(&self.filter);
        let transport = s.scale_by(&self.filter);
        let w = &(&filtered.w.scale_by(&self.neg_nu_ksq) - &momentum) + &self.buoyancy(&filtered.rho);
        let rho = &(&filtered.rho.scale_by(&self.neg_kappa_ksq) - &transport) + &self.filtered_forcing();
        FilteredState { w, rho }
    }

    /// `𝓛 = c λ₁⁻¹ (N+1)^{3/2} ρ̃`.
    pub fn lipschitz_constant(&self) -> f64 {
        lipschitz_constant(
            self.params.lipschitz_c,
            self.grid.lambda1(),
            self.params.order,
            self.params.cutoff_radius,
        )
    }

    /// Sharp constant in `‖D_N^{1/2}V‖ ≤ C ‖A^{1/2}D_N^{1/2}V‖`.
    pub fn norm_equivalence_constant(&self) -> f64 {
        (1.0 + self.params.alpha * self.params.alpha * self.grid.lambda1()).powf(-0.5)
    }
}

/// `𝓛 = c λ₁⁻¹ (N+1)^{3/2} ρ̃`.
pub fn lipschitz_constant(c: f64, lambda1: f64, order: usize, cutoff_radius: f64) -> f64 {
    c / lambda1 * ((order + 1) as f64).powf(1.5) * cutoff_radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn model(m: usize, order: usize, forcing: Option<SpectralScalar>) -> Model {
        let grid = TorusGrid::new(2.0 * PI, m).unwrap();
        let f = forcing.unwrap_or_else(|| SpectralScalar::zeros(&grid));
        Model::new(ModelParams::new(f, 1.0, 0.7, 1.0, order)).unwrap()
    }

    /// Unfiltered state whose advecting field `D_N v̄` equals the given one.
    fn state_with_advecting(model: &Model, u: SpectralVector, phi: SpectralScalar) -> State {
        let inv: Vec<f64> = model
            .dn_filter
            .iter()
            .map(|&x| if x > 0.0 { 1.0 / x } else { 0.0 })
            .collect();
        State::new(u.scale_by(&inv), phi.scale_by(&inv)).unwrap()
    }

    #[test]
    fn zero_state_has_zero_nonlinearity() {
        let m = model(16, 2, None);
        let z = State::zeros(m.grid());
        assert_eq!(m.r1(&z).max_abs_coefficient(), 0.0);
        assert_eq!(m.r2(&z).max_abs_coefficient(), 0.0);
        assert_eq!(m.rhs_full(&z).v.max_abs_coefficient(), 0.0);
    }

    #[test]
    fn shear_self_advection_vanishes() {
        let m = model(16, 1, None);
        let g = m.grid().clone();
        let u1 = SpectralScalar::from_samples(&g, &g.sample(|_, y| y.sin())).unwrap();
        let u = SpectralVector::solenoidal(u1.clone(), SpectralScalar::zeros(&g)).unwrap();
        let s = state_with_advecting(&m, u, u1);
        assert!(m.r1(&s).max_abs_coefficient() < 1e-15);
        assert!(m.r2(&s).max_abs_coefficient() < 1e-15);
    }

    #[test]
    fn filtered_rhs_matches_filtered_full_rhs() {
        let grid = TorusGrid::new(2.0 * PI, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = init::random_scalar(&grid, &mut rng, 1.0, 30.0);
        let m = model(32, 3, Some(f));
        for _ in 0..5 {
            let s = init::random_state(&grid, &mut rng, 1.0, f64::INFINITY, 1.0);
            let lhs = m.rhs_filtered(&s.filtered(1.0));
            let full = m.rhs_full(&s);
            let rhs = FilteredState {
                w: full.v.scale_by(m.filter_table()),
                rho: full.theta.scale_by(m.filter_table()),
            };
            assert!(lhs.max_abs_difference(&rhs) < 1e-12);
        }
    }

    #[test]
    fn forcing_only_filtered_rhs() {
        let grid = TorusGrid::new(2.0 * PI, 16).unwrap();
        let f = init::single_mode_scalar(&grid, (1, 0), 2.0).unwrap();
        let m = model(16, 0, Some(f));
        let zero = State::zeros(&grid).filtered(1.0);
        let out = m.rhs_filtered(&zero);
        assert_eq!(out.w.max_abs_coefficient(), 0.0);
        assert!(out.rho.max_abs_difference(&m.filtered_forcing()) < 1e-16);
    }

    #[test]
    fn chi_profile() {
        assert_eq!(cutoff_chi(0.5, 1.0), 1.0);
        assert_eq!(cutoff_chi(2.0, 1.0), 0.0);
        assert!((cutoff_chi(1.5 * 3.0, 3.0) - 0.5).abs() < 1e-15);
        // slope bound |χ'| ≤ π/2
        let h = 1e-6;
        for i in 0..1000 {
            let r = 1.0 + i as f64 / 1000.0;
            let d = (cutoff_chi(r + h, 1.0) - cutoff_chi(r, 1.0)) / h;
            assert!(d.abs() <= PI / 2.0 + 1e-5);
        }
    }

    #[test]
    fn prepared_matches_full_inside_ball() {
        let grid = TorusGrid::new(2.0 * PI, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = model(16, 2, None);
        m.params.cutoff_radius = 10.0;
        let s = init::random_state(&grid, &mut rng, 1.0, f64::INFINITY, 0.5);
        assert!(m.state_dn_norm(&s) <= 10.0);
        let diff = m.prepared_rhs(&s).max_abs_difference(&m.rhs_full(&s));
        assert!(diff < 1e-14);
    }

    #[test]
    fn prepared_is_diffusion_outside_double_ball() {
        let grid = TorusGrid::new(2.0 * PI, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = model(16, 2, None);
        m.params.cutoff_radius = 0.1;
        let s = init::random_state(&grid, &mut rng, 1.0, f64::INFINITY, 1.0);
        assert!(m.state_dn_norm(&s) >= 0.2);
        let diff = m.prepared_rhs(&s).max_abs_difference(&m.diffusion(&s));
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn state_dn_norm_values() {
        let grid = TorusGrid::new(2.0 * PI, 16).unwrap();
        let m0 = model(16, 0, None);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = init::random_state(&grid, &mut rng, 1.0, f64::INFINITY, 0.7);
        assert!((m0.state_dn_norm(&s) - s.norm()).abs() < 1e-14);
        assert_eq!(m0.state_dn_norm(&State::zeros(&grid)), 0.0);
        // α = 1, N = 1 at |k|² = 1 gives D̂ = 1.5
        let m1 = model(16, 1, None);
        let a = 0.8;
        let theta = init::single_mode_scalar(&grid, (1, 0), 2.0 * a / 2f64.sqrt()).unwrap();
        let single = State::new(SpectralVector::zeros(&grid), theta).unwrap();
        assert!((single.norm() - a).abs() < 1e-14);
        assert!((m1.state_dn_norm(&single) - a * 1.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn lipschitz_formula() {
        assert_eq!(lipschitz_constant(1.0, 1.0, 0, 2.0), 2.0);
        assert!((lipschitz_constant(1.0, 1.0, 3, 1.0) - 8.0).abs() < 1e-14);
        assert_eq!(lipschitz_constant(1.0, 1.0, 2, 4.0), 2.0 * lipschitz_constant(1.0, 1.0, 2, 2.0));
    }

    #[test]
    fn eta_reductions() {
        assert_eq!(EtaReduction::Min.reduce(1.0, 0.5), 0.5);
        assert!((EtaReduction::Euclidean.reduce(1.0, 1.0) - 3f64.sqrt()).abs() < 1e-15);
    }
}
