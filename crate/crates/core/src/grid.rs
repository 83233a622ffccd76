//! Periodic torus geometry and the Fourier lattice it carries.
//!
//! Coefficients are stored in the half-spectrum layout produced by a real
//! 2D transform: the second wavenumber index `b` runs over `0..=M/2`, the
//! first index `a` over the full range `0..M`, and the storage index is
//! `b * M + a`. Negative `k₂` are implied by the reality condition.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{AdmError, Result};
use crate::transform::SpectralTransform;

/// A distinct Laplacian eigenvalue on the retained lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenvalue {
    /// Physical value `|k|²`.
    pub ksq: f64,
    /// `a² + b²` for the integer lattice indices of the contributing points.
    pub lattice_ksq: u64,
    /// Number of lattice points with this `|k|²`.
    pub multiplicity: usize,
}

/// The square torus `[0, L)²` sampled with `M × M` points.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

struct GridInner {
    side_length: f64,
    modes: usize,
    dealias_index: i64,
    base_wavenumber: f64,
    k1: Vec<f64>,
    k2: Vec<f64>,
    ksq: Vec<f64>,
    weight: Vec<f64>,
    retained: Vec<bool>,
    transform: SpectralTransform,
}

impl TorusGrid {
    /// Builds the grid for side length `L` and `M` modes per dimension.
    ///
    /// `M` must be even and at least 4.
    pub fn new(side_length: f64, modes: usize) -> Result<Self> {
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(AdmError::InvalidGrid(format!(
                "side length must be positive, got {side_length}"
            )));
        }
        if modes < 4 {
            return Err(AdmError::InvalidGrid(format!(
                "need at least 4 modes per dimension, got {modes}"
            )));
        }
        if !modes.is_multiple_of(2) {
            return Err(AdmError::InvalidGrid(format!(
                "modes per dimension must be even, got {modes}"
            )));
        }

        let m = modes;
        let half = m / 2 + 1;
        let base = 2.0 * PI / side_length;
        // largest index strictly below M/3
        let dealias_index = ((m - 1) / 3) as i64;

        let n = m * half;
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut ksq = vec![0.0; n];
        let mut weight = vec![0.0; n];
        let mut retained = vec![false; n];
        for b in 0..half {
            for a in 0..m {
                let idx = b * m + a;
                let (i1, i2) = (signed_index(a, m), b as i64);
                k1[idx] = base * i1 as f64;
                k2[idx] = base * i2 as f64;
                ksq[idx] = k1[idx] * k1[idx] + k2[idx] * k2[idx];
                weight[idx] = if b == 0 || b == m / 2 { 1.0 } else { 2.0 };
                retained[idx] = i1.abs() <= dealias_index && i2 <= dealias_index;
            }
        }

        Ok(TorusGrid {
            inner: Arc::new(GridInner {
                side_length,
                modes,
                dealias_index,
                base_wavenumber: base,
                k1,
                k2,
                ksq,
                weight,
                retained,
                transform: SpectralTransform::new(m),
            }),
        })
    }

    pub fn side_length(&self) -> f64 {
        self.inner.side_length
    }

    pub fn modes(&self) -> usize {
        self.inner.modes
    }

    /// Number of stored `k₂` indices, `M/2 + 1`.
    pub fn half_width(&self) -> usize {
        self.inner.modes / 2 + 1
    }

    /// Length of a half-spectrum coefficient array.
    pub fn coeff_len(&self) -> usize {
        self.inner.modes * self.half_width()
    }

    /// Number of real-space samples, `M²`.
    pub fn sample_len(&self) -> usize {
        self.inner.modes * self.inner.modes
    }

    /// `2π / L`.
    pub fn base_wavenumber(&self) -> f64 {
        self.inner.base_wavenumber
    }

    /// Smallest nonzero `|k|²`, i.e. `(2π/L)²`.
    pub fn lambda1(&self) -> f64 {
        self.inner.base_wavenumber * self.inner.base_wavenumber
    }

    /// Largest integer index kept by the two-thirds rule (strictly below `M/3`).
    pub fn dealias_index(&self) -> i64 {
        self.inner.dealias_index
    }

    /// Largest `|k|²` on the retained lattice.
    pub fn max_retained_ksq(&self) -> f64 {
        let k = self.inner.dealias_index as f64;
        2.0 * k * k * self.lambda1()
    }

    /// Largest `|k|` on the retained lattice.
    pub fn max_retained_wavenumber(&self) -> f64 {
        self.max_retained_ksq().sqrt()
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize) -> usize {
        b * self.inner.modes + a
    }

    /// Storage position of the integer wavenumber `(i1, i2)` and whether the
    /// stored value must be conjugated to obtain it.
    pub fn locate(&self, i1: i64, i2: i64) -> Option<(usize, bool)> {
        let m = self.inner.modes as i64;
        let lo = -m / 2;
        let hi = m / 2 - 1;
        if i1 < lo || i1 > hi || i2 < lo || i2 > hi {
            return None;
        }
        let (j1, j2, conj) = if i2 >= 0 { (i1, i2, false) } else { (-i1, -i2, true) };
        let a = j1.rem_euclid(m) as usize;
        Some((self.index(a, j2 as usize), conj))
    }

    /// Integer lattice indices `(i1, i2)` of a storage position.
    pub fn lattice_point(&self, idx: usize) -> (i64, i64) {
        let m = self.inner.modes;
        (signed_index(idx % m, m), (idx / m) as i64)
    }

    pub fn k1(&self) -> &[f64] {
        &self.inner.k1
    }

    pub fn k2(&self) -> &[f64] {
        &self.inner.k2
    }

    pub fn ksq(&self) -> &[f64] {
        &self.inner.ksq
    }

    /// Hermitian multiplicity of each stored coefficient (1 on the
    /// self-conjugate columns, 2 elsewhere).
    pub fn weight(&self) -> &[f64] {
        &self.inner.weight
    }

    /// Two-thirds-rule mask over the stored coefficients.
    pub fn retained(&self) -> &[bool] {
        &self.inner.retained
    }

    pub(crate) fn transform(&self) -> &SpectralTransform {
        &self.inner.transform
    }

    /// Coordinates `(x₁, x₂)` of the sample at `(i1, i2)`.
    pub fn point(&self, i1: usize, i2: usize) -> (f64, f64) {
        let h = self.inner.side_length / self.inner.modes as f64;
        (i1 as f64 * h, i2 as f64 * h)
    }

    /// Real-space samples of `f(x₁, x₂)`, row-major with `x₁` as the slow index.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let m = self.inner.modes;
        let mut out = Vec::with_capacity(m * m);
        for i1 in 0..m {
            for i2 in 0..m {
                let (x1, x2) = self.point(i1, i2);
                out.push(f(x1, x2));
            }
        }
        out
    }

    /// Distinct nonzero `|k|²` on the retained lattice, increasing, with
    /// lattice-point counts.
    pub fn enumerate_eigenvalues(&self) -> Vec<Eigenvalue> {
        let k = self.inner.dealias_index;
        let mut counts = std::collections::BTreeMap::<u64, usize>::new();
        for i1 in -k..=k {
            for i2 in -k..=k {
                let s = (i1 * i1 + i2 * i2) as u64;
                if s > 0 {
                    *counts.entry(s).or_default() += 1;
                }
            }
        }
        let lambda1 = self.lambda1();
        counts
            .into_iter()
            .map(|(s, multiplicity)| Eigenvalue {
                ksq: s as f64 * lambda1,
                lattice_ksq: s,
                multiplicity,
            })
            .collect()
    }

    pub(crate) fn zeros(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.coeff_len()]
    }
}

/// Maps a storage index `0..M` onto the symmetric range `-M/2..M/2-1`.
fn signed_index(a: usize, m: usize) -> i64 {
    if a < m / 2 {
        a as i64
    } else {
        a as i64 - m as i64
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.modes == other.inner.modes
                && self.inner.side_length == other.inner.side_length)
    }
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("side_length", &self.inner.side_length)
            .field("modes", &self.inner.modes)
            .field("lambda1", &self.lambda1())
            .finish()
    }
}
