//! Brute-force reference implementations for tiny grids.
//!
//! Products are exact convolution sums over the full lattice, with no
//! transforms; multipliers are evaluated from their closed forms.

use rustfft::num_complex::Complex64;

use crate::error::{AdmError, Result};
use crate::field::{SpectralField, SpectralScalar, SpectralVector};
use crate::grid::TorusGrid;
use crate::model::{ModelParams, State};
use crate::operators::deconvolution_closed_form;

/// Largest grid accepted by the `O(M⁴)` routines.
pub const ORACLE_MAX_MODES: usize = 16;

/// Coefficients over the full `M × M` lattice `−M/2 ≤ i₁, i₂ < M/2`.
#[derive(Clone, Debug)]
pub struct DenseField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
    /// Mean `v̂₀`, kept apart from the zero-mean coefficients.
    pub mean: Complex64,
}

fn check(grid: &TorusGrid) -> Result<()> {
    if grid.modes() > ORACLE_MAX_MODES {
        Err(AdmError::OracleGridTooLarge(grid.modes()))
    } else {
        Ok(())
    }
}

impl DenseField {
    pub fn zeros(grid: &TorusGrid) -> Result<Self> {
        check(grid)?;
        let m = grid.modes();
        Ok(DenseField {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); m * m],
            mean: Complex64::new(0.0, 0.0),
        })
    }

    /// Expands the half-spectrum storage onto the full lattice.
    pub fn from_scalar(field: &SpectralScalar) -> Result<Self> {
        let mut out = DenseField::zeros(field.grid())?;
        let h = (out.grid.modes() / 2) as i64;
        for i1 in -h..h {
            for i2 in -h..h {
                let idx = out.slot(i1, i2).expect("in range");
                out.coeffs[idx] = field.coefficient(i1, i2);
            }
        }
        Ok(out)
    }

    fn slot(&self, i1: i64, i2: i64) -> Option<usize> {
        let m = self.grid.modes() as i64;
        let h = m / 2;
        if (-h..h).contains(&i1) && (-h..h).contains(&i2) {
            Some(((i1 + h) * m + (i2 + h)) as usize)
        } else {
            None
        }
    }

    pub fn get(&self, i1: i64, i2: i64) -> Complex64 {
        if (i1, i2) == (0, 0) {
            return self.mean;
        }
        self.slot(i1, i2).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    fn set(&mut self, i1: i64, i2: i64, value: Complex64) {
        if (i1, i2) == (0, 0) {
            self.mean = value;
        } else if let Some(i) = self.slot(i1, i2) {
            self.coeffs[i] = value;
        }
    }

    /// Retained modes `max(|i₁|, |i₂|) ≤ K`, excluding the origin.
    fn retained_modes(&self) -> Vec<(i64, i64)> {
        let k = self.grid.dealias_index();
        let mut out = Vec::new();
        for i1 in -k..=k {
            for i2 in -k..=k {
                if (i1, i2) != (0, 0) {
                    out.push((i1, i2));
                }
            }
        }
        out
    }

    /// Back to half-spectrum storage; the mean is dropped.
    pub fn to_scalar(&self) -> SpectralScalar {
        let h = (self.grid.modes() / 2) as i64;
        let mut modes = Vec::new();
        for i1 in -h..h {
            for i2 in 0..h {
                if (i2 > 0 || i1 >= 0) && (i1, i2) != (0, 0) && i1 > -h {
                    modes.push(((i1, i2), self.get(i1, i2)));
                }
            }
        }
        SpectralScalar::from_modes(&self.grid, &modes).expect("modes in range")
    }

    /// Multiplies each nonzero mode by `symbol(i1, i2)`.
    fn map_modes(&self, symbol: impl Fn(i64, i64) -> Complex64) -> DenseField {
        let mut out = DenseField::zeros(&self.grid).expect("grid already checked");
        for (i1, i2) in self.retained_modes() {
            out.set(i1, i2, self.get(i1, i2) * symbol(i1, i2));
        }
        out
    }
}

/// `(âb̂)_k = Σ_{p+q=k} â_p b̂_q` over retained `p, q`, kept on retained `k`.
/// The mean of the product is stored in `mean`.
pub fn direct_quadratic(a: &DenseField, b: &DenseField) -> Result<DenseField> {
    if a.grid != b.grid {
        return Err(AdmError::GridMismatch);
    }
    let mut out = DenseField::zeros(&a.grid)?;
    let k = a.grid.dealias_index();
    let modes = a.retained_modes();
    for &(p1, p2) in &modes {
        let ap = a.get(p1, p2);
        if ap == Complex64::new(0.0, 0.0) {
            continue;
        }
        for &(q1, q2) in &modes {
            let (s1, s2) = (p1 + q1, p2 + q2);
            if s1.abs() > k || s2.abs() > k {
                continue;
            }
            let v = out.get(s1, s2) + ap * b.get(q1, q2);
            out.set(s1, s2, v);
        }
    }
    Ok(out)
}

/// `ℛ₁(V)` and `ℛ₂(V)` assembled from [`direct_quadratic`], with the
/// multipliers and the Leray projection applied mode by mode.
pub fn direct_nonlinearity(state: &State, params: &ModelParams) -> Result<(SpectralVector, SpectralScalar)> {
    let grid = state.grid().clone();
    check(&grid)?;
    let k0 = grid.base_wavenumber();
    let (alpha, order) = (params.alpha, params.order);
    let smoothing = |i1: i64, i2: i64| {
        let ksq = k0 * k0 * (i1 * i1 + i2 * i2) as f64;
        let d = deconvolution_closed_form(alpha, order, ksq);
        Complex64::new(d / (1.0 + alpha * alpha * ksq), 0.0)
    };

    let u1 = DenseField::from_scalar(state.v.component(0))?.map_modes(smoothing);
    let u2 = DenseField::from_scalar(state.v.component(1))?.map_modes(smoothing);
    let phi = DenseField::from_scalar(&state.theta)?.map_modes(smoothing);

    let t11 = direct_quadratic(&u1, &u1)?;
    let t12 = direct_quadratic(&u1, &u2)?;
    let t22 = direct_quadratic(&u2, &u2)?;
    let f1 = direct_quadratic(&phi, &u1)?;
    let f2 = direct_quadratic(&phi, &u2)?;

    let mut m1 = DenseField::zeros(&grid)?;
    let mut m2 = DenseField::zeros(&grid)?;
    let mut s = DenseField::zeros(&grid)?;
    for (i1, i2) in m1.retained_modes() {
        let (k1, k2) = (k0 * i1 as f64, k0 * i2 as f64);
        let ik1 = Complex64::new(0.0, k1);
        let ik2 = Complex64::new(0.0, k2);
        let d1 = ik1 * t11.get(i1, i2) + ik2 * t12.get(i1, i2);
        let d2 = ik1 * t12.get(i1, i2) + ik2 * t22.get(i1, i2);
        // v̂ − k(k·v̂)/|k|²
        let ksq = k1 * k1 + k2 * k2;
        let dot = (d1 * k1 + d2 * k2) / ksq;
        m1.set(i1, i2, d1 - dot * k1);
        m2.set(i1, i2, d2 - dot * k2);
        s.set(i1, i2, ik1 * f1.get(i1, i2) + ik2 * f2.get(i1, i2));
    }
    let momentum = SpectralVector::new(m1.to_scalar(), m2.to_scalar())?.leray_project();
    Ok((momentum, s.to_scalar()))
}
