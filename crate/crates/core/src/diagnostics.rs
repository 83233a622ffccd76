//! Monitored norms, transient Gronwall bounds and absorbing radii.
//!
//! With `(w, ρ)` the filtered pair:
//! `y = ‖A^{1/2}D_N^{1/2}ρ‖²`, `z = ‖A^{1/2}D_N^{1/2}w‖²`,
//! `Y = ‖A D_N^{1/2}ρ‖²`, `Z = ‖A D_N^{1/2}w‖²`.

use serde::Serialize;

use crate::error::{AdmError, Result};
use crate::field::{SpectralField, SpectralScalar};
use crate::integrate::Observer;
use crate::model::{FilteredState, Model, State};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub y: f64,
    pub z: f64,
    #[serde(rename = "Y")]
    pub big_y: f64,
    #[serde(rename = "Z")]
    pub big_z: f64,
    #[serde(rename = "R1sq")]
    pub r1sq_bound: Option<f64>,
    #[serde(rename = "R2sq")]
    pub r2sq_bound: Option<f64>,
    pub chi_value: f64,
    pub dn_state_norm: f64,
    pub p_norm: Option<f64>,
    pub q_norm: Option<f64>,
    pub cone_margin: Option<f64>,
}

/// Column order of the diagnostics CSV.
pub const CSV_COLUMNS: [&str; 12] = [
    "t",
    "y",
    "z",
    "Y",
    "Z",
    "R1sq",
    "R2sq",
    "chi_value",
    "dn_state_norm",
    "p_norm",
    "q_norm",
    "cone_margin",
];

impl DiagnosticsRow {
    /// Values in [`CSV_COLUMNS`] order; `None` for absent quantities.
    pub fn values(&self) -> [Option<f64>; 12] {
        [
            Some(self.t),
            Some(self.y),
            Some(self.z),
            Some(self.big_y),
            Some(self.big_z),
            self.r1sq_bound,
            self.r2sq_bound,
            Some(self.chi_value),
            Some(self.dn_state_norm),
            self.p_norm,
            self.q_norm,
            self.cone_margin,
        ]
    }
}

/// `ÂD̂` and `Â²D̂` tables.
fn weights(model: &Model) -> (Vec<f64>, Vec<f64>) {
    let a = model.helmholtz_table();
    let d = model.dn_table();
    let ad: Vec<f64> = a.iter().zip(d).map(|(a, d)| a * d).collect();
    let a2d = ad.iter().zip(a).map(|(ad, a)| ad * a).collect();
    (ad, a2d)
}

fn sq(field: &impl SpectralField, table: &[f64]) -> f64 {
    field.weighted_inner(field, table).unwrap_or(0.0).max(0.0)
}

/// Norms of a filtered pair; bound and cone columns left empty.
pub fn compute_row_filtered(t: f64, filtered: &FilteredState, model: &Model) -> DiagnosticsRow {
    let (ad, a2d) = weights(model);
    let state = filtered.unfiltered(model.params().alpha);
    DiagnosticsRow {
        t,
        y: sq(&filtered.rho, &ad),
        z: sq(&filtered.w, &ad),
        big_y: sq(&filtered.rho, &a2d),
        big_z: sq(&filtered.w, &a2d),
        chi_value: model.chi(&state),
        dn_state_norm: model.state_dn_norm(&state),
        ..Default::default()
    }
}

/// Norms of an unfiltered state, via `(w, ρ) = G_α(v, ϑ)`.
pub fn compute_row(t: f64, state: &State, model: &Model) -> DiagnosticsRow {
    let (ad, a2d) = weights(model);
    let filtered = state.filtered(model.params().alpha);
    DiagnosticsRow {
        t,
        y: sq(&filtered.rho, &ad),
        z: sq(&filtered.w, &ad),
        big_y: sq(&filtered.rho, &a2d),
        big_z: sq(&filtered.w, &a2d),
        chi_value: model.chi(state),
        dn_state_norm: model.state_dn_norm(state),
        ..Default::default()
    }
}

/// `r₁² = (2/κ²λ₁) Σ |k|⁻² Â D̂ |ĝ|²`.
pub fn radius_r1sq(model: &Model) -> f64 {
    let g = model.filtered_forcing();
    let table: Vec<f64> = model
        .grid()
        .ksq()
        .iter()
        .zip(model.helmholtz_table())
        .zip(model.dn_table())
        .map(|((&k, a), d)| if k > 0.0 { a * d / k } else { 0.0 })
        .collect();
    let kappa = model.params().kappa;
    2.0 / (kappa * kappa * model.grid().lambda1()) * sq(&g, &table)
}

/// `R₁(t)² = r₁²/2 + (y(0) − r₁²/2) e^{−κλ₁t}`.
pub fn bound_r1sq(t: f64, y0: f64, r1sq: f64, kappa: f64, lambda1: f64) -> f64 {
    let half = 0.5 * r1sq;
    half + (y0 - half) * (-kappa * lambda1 * t).exp()
}

/// `R₂(t)²`, with separate branches for `ν = κ` and `ν ≠ κ`.
pub fn bound_r2sq(t: f64, z0: f64, y0: f64, r1sq: f64, nu: f64, kappa: f64, lambda1: f64) -> f64 {
    let limit = r1sq / (2.0 * nu * nu * lambda1 * lambda1);
    let decay = (-nu * lambda1 * t).exp();
    if nu == kappa {
        limit + (z0 - limit + y0 / (nu * lambda1) * t) * decay
    } else {
        // (e^{−κλ₁t} − e^{−νλ₁t})/(ν−κ) written without cancellation
        let mixed = decay * ((nu - kappa) * lambda1 * t).exp_m1() / (nu - kappa);
        limit + (z0 - limit) * decay + y0 / (nu * lambda1 * lambda1) * mixed
    }
}

/// `r₂² = r₁²/(ν²λ₁²)`.
pub fn radius_r2sq(r1sq: f64, nu: f64, lambda1: f64) -> f64 {
    r1sq / (nu * nu * lambda1 * lambda1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecondLevelRadii {
    pub s1sq: f64,
    pub s2sq: f64,
    pub beta: f64,
}

/// Second-level radii from the first-level radius `r² = r_sq`:
/// `β = (2/κ)‖A^{1/2}D_N^{1/2}g‖² + 2c₄⁴(N+1)²r⁴/(κα⁴)`,
/// `s₁² = 2β/(κλ₁)`, `s₂² = 2r²/(ν²λ₁)`.
pub fn radii_s(model: &Model, r_sq: f64) -> SecondLevelRadii {
    let p = model.params();
    let lambda1 = model.grid().lambda1();
    let (ad, _) = weights(model);
    let g_norm = sq(&model.filtered_forcing(), &ad);
    let n1 = (p.order + 1) as f64;
    let beta = 2.0 / p.kappa * g_norm + 2.0 * p.c4.powi(4) * n1 * n1 * r_sq * r_sq / (p.kappa * p.alpha.powi(4));
    SecondLevelRadii {
        s1sq: 2.0 * beta / (p.kappa * lambda1),
        s2sq: 2.0 * r_sq / (p.nu * p.nu * lambda1),
        beta,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AbsorbingRadii {
    pub r1sq: f64,
    pub r2sq: f64,
    pub s1sq: f64,
    pub s2sq: f64,
    pub beta: f64,
    /// `max(r₁, r₂)`.
    pub r: f64,
    /// `max(s₁, s₂)`.
    pub s: f64,
    pub t_r: Option<f64>,
    pub t_s: Option<f64>,
}

/// All radii for a model; entry times are left unset.
pub fn absorbing_radii(model: &Model) -> AbsorbingRadii {
    let p = model.params();
    let lambda1 = model.grid().lambda1();
    let r1sq = radius_r1sq(model);
    let r2sq = radius_r2sq(r1sq, p.nu, lambda1);
    let r_sq = r1sq.max(r2sq);
    let s = radii_s(model, r_sq);
    AbsorbingRadii {
        r1sq,
        r2sq,
        s1sq: s.s1sq,
        s2sq: s.s2sq,
        beta: s.beta,
        r: r_sq.sqrt(),
        s: s.s1sq.max(s.s2sq).sqrt(),
        t_r: None,
        t_s: None,
    }
}

/// First sample time from which `value ≤ radius` holds at every later sample.
pub fn detect_entry_time(series: &[(f64, f64)], radius: f64) -> Result<Option<f64>> {
    if series.is_empty() {
        return Err(AdmError::EmptySeries);
    }
    let mut entry = None;
    for &(t, v) in series.iter().rev() {
        if v <= radius {
            entry = Some(t);
        } else {
            break;
        }
    }
    Ok(entry)
}

/// Observer collecting rows with the transient bounds filled in, measured
/// from the first observed sample.
pub struct DiagnosticsRecorder<'a> {
    model: &'a Model,
    r1sq: f64,
    origin: Option<(f64, f64, f64)>,
    pub rows: Vec<DiagnosticsRow>,
}

impl<'a> DiagnosticsRecorder<'a> {
    pub fn new(model: &'a Model) -> Self {
        DiagnosticsRecorder {
            model,
            r1sq: radius_r1sq(model),
            origin: None,
            rows: Vec::new(),
        }
    }

    pub fn r1sq(&self) -> f64 {
        self.r1sq
    }

    /// `(t, y)` pairs.
    pub fn y_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.y)).collect()
    }

    /// `(t, z)` pairs.
    pub fn z_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.z)).collect()
    }

    /// Radii with entry times detected on the recorded rows.
    pub fn radii(&self) -> Result<AbsorbingRadii> {
        let mut radii = absorbing_radii(self.model);
        let r_sq = radii.r * radii.r;
        let s_sq = radii.s * radii.s;
        let series = |f: fn(&DiagnosticsRow) -> f64| -> Vec<(f64, f64)> {
            self.rows.iter().map(|r| (r.t, f(r))).collect()
        };
        let ty = detect_entry_time(&series(|r| r.y), r_sq)?;
        let tz = detect_entry_time(&series(|r| r.z), r_sq)?;
        radii.t_r = ty.zip(tz).map(|(a, b)| a.max(b));
        if let Some(tr) = radii.t_r {
            let late: Vec<DiagnosticsRow> = self.rows.iter().filter(|r| r.t >= tr).cloned().collect();
            let sy = detect_entry_time(&late.iter().map(|r| (r.t, r.big_y)).collect::<Vec<_>>(), s_sq)?;
            let sz = detect_entry_time(&late.iter().map(|r| (r.t, r.big_z)).collect::<Vec<_>>(), s_sq)?;
            radii.t_s = sy.zip(sz).map(|(a, b)| a.max(b));
        }
        Ok(radii)
    }
}

impl Observer for DiagnosticsRecorder<'_> {
    fn observe(&mut self, t: f64, state: &State) -> Result<()> {
        let mut row = compute_row(t, state, self.model);
        let (t0, y0, z0) = *self.origin.get_or_insert((t, row.y, row.z));
        let p = self.model.params();
        let lambda1 = self.model.grid().lambda1();
        let elapsed = t - t0;
        row.r1sq_bound = Some(bound_r1sq(elapsed, y0, self.r1sq, p.kappa, lambda1));
        row.r2sq_bound = Some(bound_r2sq(elapsed, z0, y0, self.r1sq, p.nu, p.kappa, lambda1));
        self.rows.push(row);
        Ok(())
    }
}

/// `‖A^{1/2} D_N^{1/2} g‖²`.
pub fn forcing_energy(model: &Model) -> f64 {
    let (ad, _) = weights(model);
    sq(&model.filtered_forcing(), &ad)
}

/// `y` of a bare scalar `ρ`, used by tests and reports.
pub fn y_of(rho: &SpectralScalar, model: &Model) -> f64 {
    let (ad, _) = weights(model);
    sq(rho, &ad)
}
