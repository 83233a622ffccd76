//! Initial conditions and forcing fields.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{AdmError, Result};
use crate::field::{SpectralField, SpectralScalar, SpectralVector};
use crate::grid::TorusGrid;
use crate::model::State;

/// Which part of the state a single-mode field populates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Velocity,
    Scalar,
}

/// Field recipe shared by initial data and forcing.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero,
    /// `amplitude · (sin k₀x₁ cos k₀x₂, −cos k₀x₁ sin k₀x₂)`, `k₀ = 2π/L`.
    TaylorGreen { amplitude: f64 },
    /// `amplitude · cos(k·x)` (scalar) or the same profile along `k^⊥/|k|`.
    SingleMode {
        k: (i64, i64),
        amplitude: f64,
        target: Target,
    },
    /// Gaussian coefficients on the retained modes with `|k|² ≤ max_ksq`,
    /// modulus `∝ (|k|²/λ₁)^{-slope/2}`, rescaled so the coefficient
    /// `L²` norm equals `amplitude`.
    RandomBand {
        seed: u64,
        spectrum_slope: f64,
        max_ksq: f64,
        amplitude: f64,
    },
}

/// Builds the initial state `(v₀, ϑ₀)` described by `spec`.
pub fn initial_state(grid: &TorusGrid, spec: &FieldSpec) -> Result<State> {
    match *spec {
        FieldSpec::Zero => Ok(State::zeros(grid)),
        FieldSpec::TaylorGreen { amplitude } => {
            let k0 = grid.base_wavenumber();
            let u1 = grid.sample(|x, y| amplitude * (k0 * x).sin() * (k0 * y).cos());
            let u2 = grid.sample(|x, y| -amplitude * (k0 * x).cos() * (k0 * y).sin());
            let v = SpectralVector::from_samples(grid, &u1, &u2)?.leray_project();
            State::new(v, SpectralScalar::zeros(grid))
        }
        FieldSpec::SingleMode { k, amplitude, target } => match target {
            Target::Scalar => State::new(SpectralVector::zeros(grid), single_mode_scalar(grid, k, amplitude)?),
            Target::Velocity => State::new(single_mode_velocity(grid, k, amplitude)?, SpectralScalar::zeros(grid)),
        },
        FieldSpec::RandomBand {
            seed,
            spectrum_slope,
            max_ksq,
            amplitude,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(random_state(grid, &mut rng, spectrum_slope, max_ksq, amplitude))
        }
    }
}

/// Builds the scalar forcing `f` described by `spec`.
pub fn forcing_field(grid: &TorusGrid, spec: &FieldSpec) -> Result<SpectralScalar> {
    match *spec {
        FieldSpec::Zero => Ok(SpectralScalar::zeros(grid)),
        FieldSpec::TaylorGreen { .. } => Err(AdmError::InvalidArgument(
            "taylor_green describes a velocity field and cannot define the scalar forcing".into(),
        )),
        FieldSpec::SingleMode { k, amplitude, .. } => single_mode_scalar(grid, k, amplitude),
        FieldSpec::RandomBand {
            seed,
            spectrum_slope,
            max_ksq,
            amplitude,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(&random_scalar(grid, &mut rng, spectrum_slope, max_ksq) * amplitude)
        }
    }
}

/// `amplitude · cos(k·x)`.
pub fn single_mode_scalar(grid: &TorusGrid, k: (i64, i64), amplitude: f64) -> Result<SpectralScalar> {
    if k == (0, 0) {
        return Err(AdmError::InvalidArgument("single mode needs k ≠ 0".into()));
    }
    SpectralScalar::from_modes(grid, &[(k, Complex64::new(amplitude / 2.0, 0.0))])
}

/// `amplitude · (k₂, −k₁)/|k| · cos(k·x)`, divergence-free.
pub fn single_mode_velocity(grid: &TorusGrid, k: (i64, i64), amplitude: f64) -> Result<SpectralVector> {
    let profile = single_mode_scalar(grid, k, amplitude)?;
    let norm = ((k.0 * k.0 + k.1 * k.1) as f64).sqrt();
    let (d1, d2) = (k.1 as f64 / norm, -k.0 as f64 / norm);
    Ok(SpectralVector::new(&profile * d1, &profile * d2)?.leray_project())
}

fn band_table(grid: &TorusGrid, spectrum_slope: f64, max_ksq: f64) -> Vec<f64> {
    let lambda1 = grid.lambda1();
    grid.ksq()
        .iter()
        .zip(grid.retained())
        .map(|(&k, &kept)| {
            if kept && k > 0.0 && k <= max_ksq * (1.0 + 1e-12) {
                (k / lambda1).powf(-spectrum_slope / 2.0)
            } else {
                0.0
            }
        })
        .collect()
}

fn gaussian_coefficients(grid: &TorusGrid, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = (0..grid.coeff_len())
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        })
        .collect();
    c[0] = Complex64::new(0.0, 0.0);
    c
}

/// Random retained-band scalar with unit coefficient `L²` norm (zero if the
/// band is empty).
pub fn random_scalar(grid: &TorusGrid, rng: &mut ChaCha8Rng, spectrum_slope: f64, max_ksq: f64) -> SpectralScalar {
    let raw = SpectralScalar::from_coefficients(grid, gaussian_coefficients(grid, rng))
        .expect("coefficient length matches grid");
    let f = raw.scale_by(&band_table(grid, spectrum_slope, max_ksq));
    normalized(f)
}

/// Random divergence-free retained-band vector with unit norm.
pub fn random_solenoidal(grid: &TorusGrid, rng: &mut ChaCha8Rng, spectrum_slope: f64, max_ksq: f64) -> SpectralVector {
    let table = band_table(grid, spectrum_slope, max_ksq);
    let u1 = SpectralScalar::from_coefficients(grid, gaussian_coefficients(grid, rng))
        .expect("coefficient length matches grid")
        .scale_by(&table);
    let u2 = SpectralScalar::from_coefficients(grid, gaussian_coefficients(grid, rng))
        .expect("coefficient length matches grid")
        .scale_by(&table);
    let v = SpectralVector::new(u1, u2).expect("same grid").leray_project();
    let n = v.norm(0.0);
    if n > 0.0 {
        &v * (1.0 / n)
    } else {
        v
    }
}

/// Random state with `‖v‖ = ‖ϑ‖ = amplitude/√2`.
pub fn random_state(
    grid: &TorusGrid,
    rng: &mut ChaCha8Rng,
    spectrum_slope: f64,
    max_ksq: f64,
    amplitude: f64,
) -> State {
    let v = random_solenoidal(grid, rng, spectrum_slope, max_ksq);
    let theta = random_scalar(grid, rng, spectrum_slope, max_ksq);
    let s = amplitude / std::f64::consts::SQRT_2;
    State::new(&v * s, &theta * s).expect("random fields are valid")
}

fn normalized(f: SpectralScalar) -> SpectralScalar {
    let n = f.norm(0.0);
    if n > 0.0 {
        &f * (1.0 / n)
    } else {
        f
    }
}
