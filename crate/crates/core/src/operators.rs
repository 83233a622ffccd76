//! Fourier-multiplier operators: the Helmholtz filter `G_α`, its inverse
//! `A = I − α²Δ`, Van Cittert deconvolution `D_N`, powers of `−Δ`, and
//! products of these raised to real powers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{AdmError, Result};
use crate::field::{SpectralField, SpectralScalar};
use crate::grid::TorusGrid;
use crate::init;

/// Base symbol of a multiplier.
#[derive(Clone, Debug, PartialEq)]
pub enum Symbol {
    /// `1 / (1 + α²|k|²)`.
    HelmholtzFilter { alpha: f64 },
    /// `1 + α²|k|²`.
    Helmholtz { alpha: f64 },
    /// `Σ_{n=0}^{N} (α²|k|² / (1 + α²|k|²))ⁿ`.
    Deconvolution { alpha: f64, order: usize },
    /// `|k|²`, the symbol of `−Δ`.
    NegLaplacian,
    /// Product of the factors.
    Composite(Vec<MultiplierSpec>),
}

/// A symbol raised to a real power.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierSpec {
    pub symbol: Symbol,
    pub power: f64,
}

impl MultiplierSpec {
    pub fn filter(alpha: f64) -> Self {
        Symbol::HelmholtzFilter { alpha }.into()
    }

    pub fn helmholtz(alpha: f64) -> Self {
        Symbol::Helmholtz { alpha }.into()
    }

    pub fn deconvolution(alpha: f64, order: usize) -> Self {
        Symbol::Deconvolution { alpha, order }.into()
    }

    /// `Λ^s = (−Δ)^{s/2}`.
    pub fn lambda_power(s: f64) -> Self {
        MultiplierSpec {
            symbol: Symbol::NegLaplacian,
            power: s / 2.0,
        }
    }

    pub fn composite(factors: Vec<MultiplierSpec>) -> Self {
        Symbol::Composite(factors).into()
    }

    /// Same symbol with the power multiplied by `p`.
    pub fn pow(mut self, p: f64) -> Self {
        self.power *= p;
        self
    }

    /// Symbol value at `|k|² = ksq`; `ksq` must be positive.
    pub fn multiplier_value(&self, ksq: f64) -> Result<f64> {
        if !(ksq > 0.0) {
            return Err(AdmError::InvalidArgument(format!(
                "multiplier needs |k|² > 0, got {ksq}"
            )));
        }
        Ok(self.value(ksq))
    }

    pub(crate) fn value(&self, ksq: f64) -> f64 {
        let base = match &self.symbol {
            Symbol::HelmholtzFilter { alpha } => 1.0 / (1.0 + alpha * alpha * ksq),
            Symbol::Helmholtz { alpha } => 1.0 + alpha * alpha * ksq,
            Symbol::Deconvolution { alpha, order } => deconvolution_symbol(*alpha, *order, ksq),
            Symbol::NegLaplacian => ksq,
            Symbol::Composite(factors) => factors.iter().map(|f| f.value(ksq)).product(),
        };
        if self.power == 1.0 {
            base
        } else {
            base.powf(self.power)
        }
    }

    /// Multiplier values in the grid's half-spectrum layout (zero at `k = 0`).
    pub fn table(&self, grid: &TorusGrid) -> Vec<f64> {
        grid.ksq()
            .iter()
            .map(|&k| if k > 0.0 { self.value(k) } else { 0.0 })
            .collect()
    }

    /// Applies the operator coefficient-wise.
    pub fn apply<F: SpectralField>(&self, field: &F) -> F {
        field.scale_by(&self.table(field.grid()))
    }
}

impl From<Symbol> for MultiplierSpec {
    fn from(symbol: Symbol) -> Self {
        MultiplierSpec { symbol, power: 1.0 }
    }
}

/// `D̂_N(k)` by the finite geometric sum.
pub fn deconvolution_symbol(alpha: f64, order: usize, ksq: f64) -> f64 {
    let a = alpha * alpha * ksq;
    let x = a / (1.0 + a);
    let mut term = 1.0;
    let mut sum = 1.0;
    for _ in 0..order {
        term *= x;
        sum += term;
    }
    sum
}

/// `D̂_N(k)` by the closed form `(1 + α²|k|²)·(1 − xᴺ⁺¹)`.
pub fn deconvolution_closed_form(alpha: f64, order: usize, ksq: f64) -> f64 {
    let a = alpha * alpha * ksq;
    // 1 − xᴺ⁺¹ with ln x = −ln(1 + 1/a)
    let tail = -(-(order as f64 + 1.0) * (1.0 / a).ln_1p()).exp_m1();
    (1.0 + a) * tail
}

/// `Â_k − D̂_N(k) = (1 + α²|k|²)·xᴺ⁺¹`, evaluated without cancellation.
pub fn deconvolution_residual(alpha: f64, order: usize, ksq: f64) -> f64 {
    let a = alpha * alpha * ksq;
    let x = a / (1.0 + a);
    (1.0 + a) * x.powi(order as i32 + 1)
}

/// One failed pointwise check of the deconvolution-operator properties.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaViolation {
    pub check: &'static str,
    pub k: (i64, i64),
    pub order: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
}

/// Outcome of [`verify_deconvolution_properties`].
#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub alpha: f64,
    pub max_order: usize,
    pub modes: usize,
    pub checks: Vec<LemmaCheck>,
    pub violations: Vec<LemmaViolation>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

const SELF_ADJOINT_TOL: f64 = 1e-12;
const COMMUTE_TOL: f64 = 1e-12;
const LARGE_K_ARGUMENT: f64 = 1e4;

/// Checks the properties of `D_N` over every nonzero lattice point of the
/// grid and every order `0 ≤ N ≤ max_order`:
///
/// * `1 ≤ D̂_N(k) ≤ N + 1` and `D̂_N(k) ≤ Â_k`;
/// * self-adjointness on seeded random fields;
/// * exact commutation with `∂₁`;
/// * pointwise growth of `D̂_N` with `N` and decrease of `‖D_N ω − Aω‖₂`
///   for `ω = cos x₁ + cos 2x₂` (lowest lattice modes);
/// * `D̂_N → N + 1` within 1% at `α²|k|² = 10⁴`.
pub fn verify_deconvolution_properties(grid: &TorusGrid, alpha: f64, max_order: usize) -> LemmaReport {
    let mut violations = Vec::new();
    let mut checks = Vec::new();
    let ksq = grid.ksq();

    // (a), (b), (e) pointwise
    let mut worst_bounds: f64 = 0.0;
    let mut worst_growth: f64 = 0.0;
    for idx in 1..ksq.len() {
        let k = ksq[idx];
        let a_hat = 1.0 + alpha * alpha * k;
        let mut previous = 0.0;
        for order in 0..=max_order {
            let d = deconvolution_symbol(alpha, order, k);
            let upper = (order + 1) as f64;
            if !(d >= 1.0 && d <= upper && d <= a_hat) {
                violations.push(LemmaViolation {
                    check: "bounds",
                    k: grid.lattice_point(idx),
                    order,
                    detail: format!("D̂ = {d}, N + 1 = {upper}, Â = {a_hat}"),
                });
            }
            worst_bounds = worst_bounds.max(d / upper.min(a_hat));
            if order > 0 && d < previous {
                violations.push(LemmaViolation {
                    check: "monotone_growth",
                    k: grid.lattice_point(idx),
                    order,
                    detail: format!("D̂_N = {d} < D̂_(N-1) = {previous}"),
                });
            }
            if order > 0 {
                worst_growth = worst_growth.max(previous - d);
            }
            previous = d;
        }
    }
    checks.push(LemmaCheck {
        name: "bounds",
        passed: !violations.iter().any(|v| v.check == "bounds"),
        worst: worst_bounds,
    });
    checks.push(LemmaCheck {
        name: "monotone_growth",
        passed: !violations.iter().any(|v| v.check == "monotone_growth"),
        worst: worst_growth,
    });

    // (c) self-adjointness, (d) commutation
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d0d0);
    let u = init::random_scalar(grid, &mut rng, 1.0, f64::INFINITY);
    let v = init::random_scalar(grid, &mut rng, 1.0, f64::INFINITY);
    let mut worst_adjoint: f64 = 0.0;
    let mut worst_commute: f64 = 0.0;
    for order in 0..=max_order {
        let dn = MultiplierSpec::deconvolution(alpha, order);
        let lhs = dn.apply(&u).inner(&v, 0.0).unwrap_or(f64::NAN);
        let rhs = u.inner(&dn.apply(&v), 0.0).unwrap_or(f64::NAN);
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        let err = (lhs - rhs).abs() / scale;
        worst_adjoint = worst_adjoint.max(err);
        if !(err <= SELF_ADJOINT_TOL) {
            violations.push(LemmaViolation {
                check: "self_adjoint",
                k: (0, 0),
                order,
                detail: format!("relative asymmetry {err:e}"),
            });
        }
        let a = dn.apply(&u.derivative(0));
        let b = dn.apply(&u).derivative(0);
        let diff = a.max_abs_difference(&b);
        let diff = diff / b.max_abs_coefficient().max(f64::MIN_POSITIVE);
        worst_commute = worst_commute.max(diff);
        if !(diff <= COMMUTE_TOL) {
            violations.push(LemmaViolation {
                check: "commutes_with_derivative",
                k: (0, 0),
                order,
                detail: format!("max coefficient difference {diff:e}"),
            });
        }
    }
    checks.push(LemmaCheck {
        name: "self_adjoint",
        passed: worst_adjoint <= SELF_ADJOINT_TOL,
        worst: worst_adjoint,
    });
    checks.push(LemmaCheck {
        name: "commutes_with_derivative",
        passed: worst_commute <= COMMUTE_TOL,
        worst: worst_commute,
    });

    // (e) convergence toward A on a fixed smooth field, measured in H²
    let residuals = convergence_residuals(grid, alpha, max_order);
    let decreasing = residuals.windows(2).all(|w| w[1] < w[0]);
    if !decreasing {
        violations.push(LemmaViolation {
            check: "convergence_to_a",
            k: (0, 0),
            order: max_order,
            detail: format!("residuals not strictly decreasing: {residuals:?}"),
        });
    }
    checks.push(LemmaCheck {
        name: "convergence_to_a",
        passed: decreasing,
        worst: residuals.last().copied().unwrap_or(0.0),
    });

    // (f) large-|k| limit
    let ksq_large = LARGE_K_ARGUMENT / (alpha * alpha);
    let mut worst_limit: f64 = 0.0;
    for order in 0..=max_order {
        let d = deconvolution_symbol(alpha, order, ksq_large);
        let rel = (d - (order + 1) as f64).abs() / (order + 1) as f64;
        worst_limit = worst_limit.max(rel);
        if rel > 0.01 {
            violations.push(LemmaViolation {
                check: "large_k_limit",
                k: (0, 0),
                order,
                detail: format!("D̂ = {d} at α²|k|² = 1e4"),
            });
        }
    }
    checks.push(LemmaCheck {
        name: "large_k_limit",
        passed: worst_limit <= 0.01,
        worst: worst_limit,
    });

    LemmaReport {
        alpha,
        max_order,
        modes: grid.modes(),
        checks,
        violations,
    }
}

/// `‖D_N ω − Aω‖₂` for `N = 0..=max_order`, `ω = cos(k₀x₁) + cos(2k₀x₂)`.
pub fn convergence_residuals(grid: &TorusGrid, alpha: f64, max_order: usize) -> Vec<f64> {
    use rustfft::num_complex::Complex64;
    let half = Complex64::new(0.5, 0.0);
    let omega = SpectralScalar::from_modes(grid, &[((1, 0), half), ((0, 2), half)])
        .expect("lowest modes fit on any grid");
    (0..=max_order)
        .map(|order| {
            let residual: Vec<f64> = grid
                .ksq()
                .iter()
                .map(|&k| if k > 0.0 { deconvolution_residual(alpha, order, k) } else { 0.0 })
                .collect();
            omega.scale_by(&residual).norm(2.0)
        })
        .collect()
}
