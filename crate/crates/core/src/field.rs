//! Zero-mean real fields stored by their Fourier coefficients.
//!
//! Norms follow the coefficient convention `‖v‖²_s = Σ |k|^{2s} |v̂_k|²`,
//! which differs from the real-space `L²` integral by the factor `|𝕋²|`.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use rustfft::num_complex::Complex64;

use crate::error::{AdmError, Result};
use crate::grid::TorusGrid;

static MEAN_WARNINGS: AtomicU64 = AtomicU64::new(0);

/// Number of times a nonzero mean was stripped from incoming data.
pub fn mean_warning_count() -> u64 {
    MEAN_WARNINGS.load(Ordering::Relaxed)
}

const MEAN_TOLERANCE: f64 = 1e-14;

fn strip_mean(coeffs: &mut [Complex64]) {
    if coeffs[0].norm() > MEAN_TOLERANCE {
        MEAN_WARNINGS.fetch_add(1, Ordering::Relaxed);
    }
    coeffs[0] = Complex64::new(0.0, 0.0);
}

/// Common surface of scalar and vector fields.
pub trait SpectralField: Clone {
    fn grid(&self) -> &TorusGrid;

    /// Multiplies every coefficient by `table[idx]` (half-spectrum layout).
    fn scale_by(&self, table: &[f64]) -> Self;

    /// `Σ |k|^{2s} â_k·conj(b̂_k)` over the full lattice.
    fn inner(&self, other: &Self, s: f64) -> Result<f64>;

    /// Same as [`inner`](Self::inner) with per-mode weights instead of `|k|^{2s}`.
    fn weighted_inner(&self, other: &Self, table: &[f64]) -> Result<f64>;

    fn norm(&self, s: f64) -> f64 {
        self.inner(self, s).map(|v| v.max(0.0).sqrt()).unwrap_or(0.0)
    }

    /// `sqrt(Σ table_k |v̂_k|²)`.
    fn weighted_norm(&self, table: &[f64]) -> f64 {
        self.weighted_inner(self, table)
            .map(|v| v.max(0.0).sqrt())
            .unwrap_or(0.0)
    }

    /// Zeroes every coefficient with `|k|² > cutoff`.
    fn truncate(&self, cutoff: f64) -> Self {
        let table: Vec<f64> = self
            .grid()
            .ksq()
            .iter()
            .map(|&k| if k > cutoff { 0.0 } else { 1.0 })
            .collect();
        self.scale_by(&table)
    }

    /// Zeroes every coefficient outside the two-thirds-rule square.
    fn dealias(&self) -> Self {
        let table: Vec<f64> = self
            .grid()
            .retained()
            .iter()
            .map(|&r| if r { 1.0 } else { 0.0 })
            .collect();
        self.scale_by(&table)
    }
}

fn sobolev_weights(grid: &TorusGrid, s: f64) -> Vec<f64> {
    grid.ksq()
        .iter()
        .map(|&k| if k > 0.0 { k.powf(s) } else { 0.0 })
        .collect()
}

/// A real, zero-mean scalar field.
#[derive(Clone, Debug)]
pub struct SpectralScalar {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralScalar {
    pub fn zeros(grid: &TorusGrid) -> Self {
        SpectralScalar {
            grid: grid.clone(),
            coeffs: grid.zeros(),
        }
    }

    /// Forward transform of `M × M` real samples (row-major, `x₁` slow).
    ///
    /// A nonzero sample mean is removed and counted in
    /// [`mean_warning_count`].
    pub fn from_samples(grid: &TorusGrid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.sample_len() {
            return Err(AdmError::DimensionMismatch {
                expected: grid.sample_len(),
                actual: samples.len(),
            });
        }
        let mut coeffs = grid.transform().forward(samples);
        strip_mean(&mut coeffs);
        Ok(SpectralScalar {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Builds a field from half-spectrum coefficients. The self-conjugate
    /// columns are symmetrized so the field is real.
    pub fn from_coefficients(grid: &TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.coeff_len() {
            return Err(AdmError::DimensionMismatch {
                expected: grid.coeff_len(),
                actual: coeffs.len(),
            });
        }
        let mut field = SpectralScalar {
            grid: grid.clone(),
            coeffs,
        };
        strip_mean(&mut field.coeffs);
        field.symmetrize();
        Ok(field)
    }

    /// Builds a field from `(k₁, k₂, v̂_k)` triples on the integer lattice;
    /// the conjugate partner of every entry is implied.
    pub fn from_modes(grid: &TorusGrid, modes: &[((i64, i64), Complex64)]) -> Result<Self> {
        let mut field = SpectralScalar::zeros(grid);
        for &((i1, i2), value) in modes {
            field.add_mode(i1, i2, value)?;
        }
        Ok(field)
    }

    /// Adds `value` to `v̂_k` and its conjugate to `v̂_{-k}`.
    pub fn add_mode(&mut self, i1: i64, i2: i64, value: Complex64) -> Result<()> {
        if i1 == 0 && i2 == 0 {
            if value.norm() > MEAN_TOLERANCE {
                MEAN_WARNINGS.fetch_add(1, Ordering::Relaxed);
            }
            return Ok(());
        }
        let (idx, conj) = self.grid.locate(i1, i2).ok_or_else(|| {
            AdmError::InvalidArgument(format!("wavenumber ({i1}, {i2}) outside the grid"))
        })?;
        let v = if conj { value.conj() } else { value };
        self.coeffs[idx] += v;
        // the conjugate partner is stored explicitly on the self-conjugate columns
        let m = self.grid.modes();
        let (a, b) = (idx % m, idx / m);
        if b == 0 || b == m / 2 {
            let pidx = b * m + (m - a) % m;
            if pidx == idx {
                self.coeffs[idx].im = 0.0;
            } else {
                self.coeffs[pidx] += v.conj();
            }
        }
        Ok(())
    }

    fn symmetrize(&mut self) {
        let m = self.grid.modes();
        let h = self.grid.half_width();
        for b in [0, h - 1] {
            for a in 0..m {
                let pa = (m - a) % m;
                if pa < a {
                    continue;
                }
                let i = b * m + a;
                let j = b * m + pa;
                let avg = (self.coeffs[i] + self.coeffs[j].conj()) * 0.5;
                self.coeffs[i] = avg;
                self.coeffs[j] = avg.conj();
            }
        }
    }

    /// Inverse transform to `M × M` real samples.
    pub fn to_samples(&self) -> Vec<f64> {
        self.grid.transform().inverse(&self.coeffs)
    }

    /// Half-spectrum coefficients.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `v̂_k` for any lattice wavenumber in range; zero outside.
    pub fn coefficient(&self, i1: i64, i2: i64) -> Complex64 {
        match self.grid.locate(i1, i2) {
            Some((idx, false)) => self.coeffs[idx],
            Some((idx, true)) => self.coeffs[idx].conj(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub(crate) fn from_raw(grid: &TorusGrid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.coeff_len());
        SpectralScalar {
            grid: grid.clone(),
            coeffs,
        }
    }

    /// `∂/∂x_axis` (axis 0 or 1). The Nyquist index has no odd derivative and
    /// is zeroed.
    pub fn derivative(&self, axis: usize) -> SpectralScalar {
        let k = if axis == 0 { self.grid.k1() } else { self.grid.k2() };
        let nyquist = self.grid.base_wavenumber() * (self.grid.modes() / 2) as f64;
        let coeffs = self
            .coeffs
            .iter()
            .zip(k)
            .map(|(&c, &kj)| {
                if (kj.abs() - nyquist).abs() < 1e-9 * nyquist {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, kj)
                }
            })
            .collect();
        SpectralScalar::from_raw(&self.grid, coeffs)
    }

    /// Largest coefficient modulus.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_difference(&self, other: &SpectralScalar) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub(crate) fn combine(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert!(self.grid == other.grid, "fields live on different grids");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| f(a, b))
            .collect();
        SpectralScalar::from_raw(&self.grid, coeffs)
    }
}

impl SpectralField for SpectralScalar {
    fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn scale_by(&self, table: &[f64]) -> Self {
        let coeffs = self.coeffs.iter().zip(table).map(|(&c, &t)| c * t).collect();
        SpectralScalar::from_raw(&self.grid, coeffs)
    }

    fn inner(&self, other: &Self, s: f64) -> Result<f64> {
        if self.grid != other.grid {
            return Err(AdmError::GridMismatch);
        }
        self.weighted_inner(other, &sobolev_weights(&self.grid, s))
    }

    fn weighted_inner(&self, other: &Self, table: &[f64]) -> Result<f64> {
        if self.grid != other.grid {
            return Err(AdmError::GridMismatch);
        }
        let w = self.grid.weight();
        let mut sum = 0.0;
        for i in 1..self.coeffs.len() {
            let a = self.coeffs[i];
            let b = other.coeffs[i];
            sum += w[i] * table[i] * (a.re * b.re + a.im * b.im);
        }
        Ok(sum)
    }
}

impl Add for &SpectralScalar {
    type Output = SpectralScalar;
    fn add(self, rhs: &SpectralScalar) -> SpectralScalar {
        self.combine(rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralScalar {
    type Output = SpectralScalar;
    fn sub(self, rhs: &SpectralScalar) -> SpectralScalar {
        self.combine(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &SpectralScalar {
    type Output = SpectralScalar;
    fn mul(self, rhs: f64) -> SpectralScalar {
        let coeffs = self.coeffs.iter().map(|&c| c * rhs).collect();
        SpectralScalar::from_raw(&self.grid, coeffs)
    }
}

impl Neg for &SpectralScalar {
    type Output = SpectralScalar;
    fn neg(self) -> SpectralScalar {
        self * -1.0
    }
}

/// A real, zero-mean planar vector field.
#[derive(Clone, Debug)]
pub struct SpectralVector {
    components: [SpectralScalar; 2],
    solenoidal: bool,
}

/// Per-coefficient bound on `|k·v̂_k|` for fields flagged solenoidal.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-12;

impl SpectralVector {
    pub fn zeros(grid: &TorusGrid) -> Self {
        SpectralVector {
            components: [SpectralScalar::zeros(grid), SpectralScalar::zeros(grid)],
            solenoidal: true,
        }
    }

    /// Generic (not necessarily divergence-free) field.
    pub fn new(u1: SpectralScalar, u2: SpectralScalar) -> Result<Self> {
        if u1.grid != u2.grid {
            return Err(AdmError::GridMismatch);
        }
        Ok(SpectralVector {
            components: [u1, u2],
            solenoidal: false,
        })
    }

    /// Field asserted divergence-free; fails if any `|k·v̂_k|` exceeds
    /// [`DIVERGENCE_TOLERANCE`].
    pub fn solenoidal(u1: SpectralScalar, u2: SpectralScalar) -> Result<Self> {
        let mut v = SpectralVector::new(u1, u2)?;
        let div = v.max_divergence();
        if div > DIVERGENCE_TOLERANCE {
            return Err(AdmError::InvalidArgument(format!(
                "field is not solenoidal: max |k·v̂_k| = {div:e}"
            )));
        }
        v.solenoidal = true;
        Ok(v)
    }

    pub fn from_samples(grid: &TorusGrid, u1: &[f64], u2: &[f64]) -> Result<Self> {
        SpectralVector::new(
            SpectralScalar::from_samples(grid, u1)?,
            SpectralScalar::from_samples(grid, u2)?,
        )
    }

    pub fn component(&self, i: usize) -> &SpectralScalar {
        &self.components[i]
    }

    pub fn components(&self) -> &[SpectralScalar; 2] {
        &self.components
    }

    pub fn into_components(self) -> [SpectralScalar; 2] {
        self.components
    }

    pub fn is_solenoidal(&self) -> bool {
        self.solenoidal
    }

    pub(crate) fn with_flag(components: [SpectralScalar; 2], solenoidal: bool) -> Self {
        SpectralVector {
            components,
            solenoidal,
        }
    }

    /// `max_k |k·v̂_k|`.
    pub fn max_divergence(&self) -> f64 {
        let grid = self.components[0].grid();
        let (k1, k2) = (grid.k1(), grid.k2());
        let (a, b) = (&self.components[0].coeffs, &self.components[1].coeffs);
        (0..a.len())
            .map(|i| (a[i] * k1[i] + b[i] * k2[i]).norm())
            .fold(0.0, f64::max)
    }

    /// Helmholtz–Leray projection `v̂_k ↦ v̂_k − k(k·v̂_k)/|k|²`.
    pub fn leray_project(&self) -> SpectralVector {
        let grid = self.components[0].grid();
        let (k1, k2, ksq) = (grid.k1(), grid.k2(), grid.ksq());
        let (a, b) = (&self.components[0].coeffs, &self.components[1].coeffs);
        let n = a.len();
        let mut p1 = Vec::with_capacity(n);
        let mut p2 = Vec::with_capacity(n);
        for i in 0..n {
            if ksq[i] > 0.0 {
                let dot = (a[i] * k1[i] + b[i] * k2[i]) / ksq[i];
                p1.push(a[i] - dot * k1[i]);
                p2.push(b[i] - dot * k2[i]);
            } else {
                p1.push(Complex64::new(0.0, 0.0));
                p2.push(Complex64::new(0.0, 0.0));
            }
        }
        SpectralVector {
            components: [
                SpectralScalar::from_raw(grid, p1),
                SpectralScalar::from_raw(grid, p2),
            ],
            solenoidal: true,
        }
    }

    /// Scalar divergence `∂₁u₁ + ∂₂u₂`.
    pub fn divergence(&self) -> SpectralScalar {
        &self.components[0].derivative(0) + &self.components[1].derivative(1)
    }

    pub fn max_abs_difference(&self, other: &SpectralVector) -> f64 {
        self.components[0]
            .max_abs_difference(&other.components[0])
            .max(self.components[1].max_abs_difference(&other.components[1]))
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.components[0]
            .max_abs_coefficient()
            .max(self.components[1].max_abs_coefficient())
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(SpectralScalar::is_finite)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&SpectralScalar, &SpectralScalar) -> SpectralScalar) -> Self {
        SpectralVector {
            components: [
                f(&self.components[0], &other.components[0]),
                f(&self.components[1], &other.components[1]),
            ],
            solenoidal: self.solenoidal && other.solenoidal,
        }
    }
}

impl SpectralField for SpectralVector {
    fn grid(&self) -> &TorusGrid {
        self.components[0].grid()
    }

    fn scale_by(&self, table: &[f64]) -> Self {
        SpectralVector {
            components: [
                self.components[0].scale_by(table),
                self.components[1].scale_by(table),
            ],
            solenoidal: self.solenoidal,
        }
    }

    fn inner(&self, other: &Self, s: f64) -> Result<f64> {
        Ok(self.components[0].inner(&other.components[0], s)?
            + self.components[1].inner(&other.components[1], s)?)
    }

    fn weighted_inner(&self, other: &Self, table: &[f64]) -> Result<f64> {
        Ok(self.components[0].weighted_inner(&other.components[0], table)?
            + self.components[1].weighted_inner(&other.components[1], table)?)
    }
}

impl Add for &SpectralVector {
    type Output = SpectralVector;
    fn add(self, rhs: &SpectralVector) -> SpectralVector {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralVector {
    type Output = SpectralVector;
    fn sub(self, rhs: &SpectralVector) -> SpectralVector {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &SpectralVector {
    type Output = SpectralVector;
    fn mul(self, rhs: f64) -> SpectralVector {
        SpectralVector {
            components: [&self.components[0] * rhs, &self.components[1] * rhs],
            solenoidal: self.solenoidal,
        }
    }
}

impl Neg for &SpectralVector {
    type Output = SpectralVector;
    fn neg(self) -> SpectralVector {
        self * -1.0
    }
}
