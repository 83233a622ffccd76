//! Integrating-factor time stepping.
//!
//! Diffusion is integrated exactly per mode by `exp(−ν|k|²h)` (velocity) and
//! `exp(−κ|k|²h)` (scalar); the remaining terms are explicit.

use serde::Serialize;

use crate::error::{AdmError, Result};
use crate::model::{Model, State};

/// Explicit scheme applied to the non-stiff part.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Integrating-factor Heun, second order.
    #[default]
    IfRk2,
    /// Integrating-factor forward Euler, first order.
    IfEuler,
}

/// Which right-hand side is advanced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    #[default]
    Full,
    /// Nonlinear and forcing terms scaled by `χ_ρ̃(‖D_N^{1/2}V‖)`.
    Prepared,
    /// Prepared system with `χ ≡ 0`: pure diffusion.
    Diffusion,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub observer_stride: usize,
}

/// Advective CFL safety factor.
pub const CFL_SAFETY: f64 = 0.5;

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        IntegratorConfig {
            dt,
            t_end,
            scheme: Scheme::IfRk2,
            observer_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(AdmError::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > self.dt) {
            return Err(AdmError::InvalidArgument(format!(
                "t_end must exceed dt, got t_end = {} and dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.observer_stride == 0 {
            return Err(AdmError::InvalidArgument("observer_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps; sample times are `k·dt`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Receives `(t, V)` every `observer_stride` steps, including `t = 0`.
pub trait Observer {
    fn observe(&mut self, t: f64, state: &State) -> Result<()>;
}

impl<F: FnMut(f64, &State)> Observer for F {
    fn observe(&mut self, t: f64, state: &State) -> Result<()> {
        self(t, state);
        Ok(())
    }
}

/// One model and step size with the exponential factors precomputed.
pub struct Stepper<'a> {
    model: &'a Model,
    system: System,
    scheme: Scheme,
    dt: f64,
    full_v: Vec<f64>,
    full_theta: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a Model, dt: f64, scheme: Scheme, system: System) -> Self {
        let ksq = model.grid().ksq();
        let (nu, kappa) = (model.params().nu, model.params().kappa);
        let factors = |c: f64, h: f64| ksq.iter().map(|k| (-c * k * h).exp()).collect::<Vec<_>>();
        Stepper {
            model,
            system,
            scheme,
            dt,
            full_v: factors(nu, dt),
            full_theta: factors(kappa, dt),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn system(&self) -> System {
        self.system
    }

    /// Explicit tendency, `None` when it vanishes identically.
    fn explicit(&self, state: &State) -> Option<State> {
        match self.system {
            System::Full => Some(self.model.explicit_terms(state)),
            System::Prepared => {
                let chi = self.model.chi(state);
                if chi == 0.0 {
                    None
                } else {
                    Some(&self.model.explicit_terms(state) * chi)
                }
            }
            System::Diffusion => None,
        }
    }

    /// Largest stable `dt` for the current advecting field, `∞` when there is none.
    pub fn cfl_limit(&self, state: &State) -> f64 {
        let chi = match self.system {
            System::Full => 1.0,
            System::Prepared => self.model.chi(state),
            System::Diffusion => 0.0,
        };
        if chi == 0.0 {
            return f64::INFINITY;
        }
        let u = self.model.advecting_velocity(state);
        let u1 = u.component(0).to_samples();
        let u2 = u.component(1).to_samples();
        let umax = u1
            .iter()
            .zip(&u2)
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0_f64, f64::max)
            * chi;
        let kmax = self.model.grid().max_retained_wavenumber();
        if umax == 0.0 {
            f64::INFINITY
        } else {
            CFL_SAFETY / (kmax * umax)
        }
    }

    /// Advances `state` from time `t` by one step.
    pub fn step(&self, state: &State, t: f64) -> Result<State> {
        let limit = self.cfl_limit(state);
        if self.dt > limit {
            return Err(AdmError::CflViolation {
                t,
                dt: self.dt,
                limit,
            });
        }
        let h = self.dt;
        let next = match (self.scheme, self.explicit(state)) {
            (_, None) => state.scale_by(&self.full_v, &self.full_theta),
            (Scheme::IfEuler, Some(k1)) => (state + &(&k1 * h)).scale_by(&self.full_v, &self.full_theta),
            (Scheme::IfRk2, Some(k1)) => {
                let predictor = (state + &(&k1 * h)).scale_by(&self.full_v, &self.full_theta);
                let base = (state + &(&k1 * (0.5 * h))).scale_by(&self.full_v, &self.full_theta);
                match self.explicit(&predictor) {
                    Some(k2) => &base + &(&k2 * (0.5 * h)),
                    None => base,
                }
            }
        };
        let next = next.reproject();
        if !next.is_finite() {
            return Err(AdmError::NonFinite { t: t + h });
        }
        Ok(next)
    }
}

/// Outcome of [`simulate`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub final_state: State,
    pub final_time: f64,
    pub steps: usize,
}

/// Runs `config.steps()` steps from `initial`, calling every observer at
/// `t = k·dt` whenever `k` is a multiple of the stride.
pub fn simulate(
    model: &Model,
    initial: &State,
    config: &IntegratorConfig,
    system: System,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    config.validate()?;
    if initial.grid() != model.grid() {
        return Err(AdmError::GridMismatch);
    }
    let stepper = Stepper::new(model, config.dt, config.scheme, system);
    let steps = config.steps();
    let mut state = initial.clone();
    for k in 0..=steps {
        let t = k as f64 * config.dt;
        if k % config.observer_stride == 0 {
            for obs in observers.iter_mut() {
                obs.observe(t, &state)?;
            }
        }
        if k < steps {
            state = stepper.step(&state, t)?;
        }
    }
    Ok(Trajectory {
        final_state: state,
        final_time: steps as f64 * config.dt,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{SpectralScalar, SpectralVector};
    use crate::grid::TorusGrid;
    use crate::init;
    use crate::model::ModelParams;
    use std::f64::consts::PI;

    fn model(grid: &TorusGrid, nu: f64, kappa: f64, order: usize) -> Model {
        Model::new(ModelParams::new(SpectralScalar::zeros(grid), nu, kappa, 1.0, order)).unwrap()
    }

    #[test]
    fn diffusion_is_exact() {
        let grid = TorusGrid::new(2.0 * PI, 16).unwrap();
        let m = model(&grid, 1.0, 1.0, 2);
        let theta = SpectralScalar::from_samples(&grid, &grid.sample(|x, _| x.sin())).unwrap();
        let s = State::new(SpectralVector::zeros(&grid), theta).unwrap();
        for dt in [1e-3, 0.1, 0.7] {
            let out = Stepper::new(&m, dt, Scheme::IfRk2, System::Diffusion).step(&s, 0.0).unwrap();
            let expect = (-dt).exp();
            let c = out.theta.coefficient(1, 0).im / s.theta.coefficient(1, 0).im;
            assert!((c - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let grid = TorusGrid::new(2.0 * PI, 16).unwrap();
        let m = model(&grid, 1.0, 0.5, 1);
        let z = State::zeros(&grid);
        let out = simulate(&m, &z, &IntegratorConfig::new(0.01, 0.1), System::Full, &mut []).unwrap();
        assert_eq!(out.final_state.norm(), 0.0);
        assert_eq!(out.steps, 10);
    }

    #[test]
    fn observers_see_stride_samples() {
        let grid = TorusGrid::new(2.0 * PI, 8).unwrap();
        let m = model(&grid, 1.0, 1.0, 0);
        let mut times = Vec::new();
        let mut obs = |t: f64, _: &State| times.push(t);
        let mut cfg = IntegratorConfig::new(0.1, 1.0);
        cfg.observer_stride = 3;
        simulate(&m, &State::zeros(&grid), &cfg, System::Full, &mut [&mut obs]).unwrap();
        assert_eq!(times.len(), 4);
        assert!((times[3] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn cfl_violation_is_reported() {
        let grid = TorusGrid::new(2.0 * PI, 32).unwrap();
        let m = model(&grid, 1.0, 1.0, 0);
        let s = init::initial_state(&grid, &init::FieldSpec::TaylorGreen { amplitude: 100.0 }).unwrap();
        let err = Stepper::new(&m, 0.1, Scheme::IfRk2, System::Full).step(&s, 0.0).unwrap_err();
        assert!(matches!(err, AdmError::CflViolation { .. }));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(IntegratorConfig::new(0.0, 1.0).validate().is_err());
        assert!(IntegratorConfig::new(1.0, 0.5).validate().is_err());
    }
}
