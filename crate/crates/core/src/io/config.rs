//! Flat `key = value` run configuration.
//!
//! Keys carry dotted section prefixes (`grid.M = 64`); `#` starts a comment.
//! Unknown and duplicate keys are errors. Every key is echoed, resolved,
//! into output metadata.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{AdmError, Result};
use crate::field::SpectralScalar;
use crate::grid::TorusGrid;
use crate::init::{FieldSpec, Target};
use crate::integrate::{IntegratorConfig, Scheme, System};
use crate::model::{EtaReduction, ModelParams};
use crate::operators::MultiplierSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Gap,
    Squeeze,
    VerifyOps,
}

impl Experiment {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "simulate" => Some(Experiment::Simulate),
            "gap" => Some(Experiment::Gap),
            "squeeze" => Some(Experiment::Squeeze),
            "verify-ops" => Some(Experiment::VerifyOps),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Gap => "gap",
            Experiment::Squeeze => "squeeze",
            Experiment::VerifyOps => "verify-ops",
        }
    }
}

/// Whether the configured forcing field is `f` itself or the filtered `g`
/// (then `f = A g`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingTarget {
    F,
    G,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputConfig {
    /// Write a snapshot every this many steps; 0 disables periodic snapshots.
    pub snapshot_stride: usize,
    pub final_snapshot: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapConfig {
    pub calibrate: bool,
    pub calibration_samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SqueezeConfig {
    pub pairs: usize,
    pub seed: u64,
    pub calibrate: bool,
    pub calibration_samples: usize,
    /// `‖D_N^{1/2}V₁(0)‖` as a multiple of `ρ̃`.
    pub base_radius: f64,
    /// `‖D_N^{1/2}(V₂(0) − V₁(0))‖` as a multiple of `ρ̃`.
    pub perturbation: f64,
    /// Fixed cutoff `λ_n`; the gap search is used when absent.
    pub cutoff_eigenvalue: Option<f64>,
    pub system: System,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub alphas: Vec<f64>,
    pub max_order: usize,
    pub seed: u64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub side_length: f64,
    pub modes: usize,
    pub nu: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub order: usize,
    pub cutoff_radius: f64,
    pub gamma: f64,
    pub lipschitz_c: f64,
    pub c4: f64,
    pub eta_reduction: EtaReduction,
    pub integrator: IntegratorConfig,
    pub system: System,
    pub initial: FieldSpec,
    pub forcing: FieldSpec,
    pub forcing_applies_to: ForcingTarget,
    pub output: OutputConfig,
    pub gap: GapConfig,
    pub squeeze: SqueezeConfig,
    pub verify: VerifyConfig,
    /// Every key with its resolved value, in schema order.
    pub resolved: Vec<(String, String)>,
}

/// Schema: key and default; `None` marks a mandatory key.
const SCHEMA: &[(&str, Option<&str>)] = &[
    ("experiment", Some("")),
    ("grid.L", None),
    ("grid.M", None),
    ("params.nu", None),
    ("params.kappa", None),
    ("params.alpha", None),
    ("params.N", Some("0")),
    ("params.cutoff_radius", Some("1")),
    ("params.gamma", Some("1")),
    ("params.lipschitz_c", Some("1")),
    ("params.c4", Some("1")),
    ("params.eta_reduction", Some("min")),
    ("integrator.dt", Some("0.001")),
    ("integrator.t_end", Some("1")),
    ("integrator.scheme", Some("if_rk2")),
    ("integrator.observer_stride", Some("1")),
    ("integrator.system", Some("full")),
    ("initial.kind", Some("taylor_green")),
    ("initial.amplitude", Some("1")),
    ("initial.k", Some("1,0")),
    ("initial.target", Some("scalar")),
    ("initial.seed", Some("0")),
    ("initial.spectrum_slope", Some("1")),
    ("initial.max_ksq", Some("inf")),
    ("forcing.kind", Some("zero")),
    ("forcing.amplitude", Some("1")),
    ("forcing.k", Some("1,0")),
    ("forcing.seed", Some("0")),
    ("forcing.spectrum_slope", Some("1")),
    ("forcing.max_ksq", Some("inf")),
    ("forcing.applies_to", Some("f")),
    ("output.snapshot_stride", Some("0")),
    ("output.final_snapshot", Some("true")),
    ("gap.calibrate", Some("false")),
    ("gap.calibration_samples", Some("200")),
    ("gap.seed", Some("0")),
    ("squeeze.pairs", Some("20")),
    ("squeeze.seed", Some("1")),
    ("squeeze.calibrate", Some("true")),
    ("squeeze.calibration_samples", Some("200")),
    ("squeeze.base_radius", Some("0.5")),
    ("squeeze.perturbation", Some("0.2")),
    ("squeeze.cutoff_eigenvalue", Some("auto")),
    ("squeeze.system", Some("prepared")),
    ("verify.alphas", Some("0.1,1")),
    ("verify.max_order", Some("8")),
    ("verify.seed", Some("0")),
    ("verify.samples", Some("20")),
];

/// Keys of the configuration schema in canonical order.
pub fn known_keys() -> impl Iterator<Item = &'static str> {
    SCHEMA.iter().map(|(k, _)| *k)
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut given: HashMap<&str, (String, usize)> = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            AdmError::config(line, format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let Some(&(schema_key, _)) = SCHEMA.iter().find(|(k, _)| *k == key) else {
            return Err(AdmError::config(key, format!("unknown key on line {}", lineno + 1)));
        };
        if let Some((_, first)) = given.get(schema_key) {
            return Err(AdmError::config(
                key,
                format!("duplicate key on lines {} and {}", first, lineno + 1),
            ));
        }
        given.insert(schema_key, (value.to_string(), lineno + 1));
    }

    let mut resolved = Vec::with_capacity(SCHEMA.len());
    for &(key, default) in SCHEMA {
        let value = match (given.get(key), default) {
            (Some((v, _)), _) => v.clone(),
            (None, Some(d)) => d.to_string(),
            (None, None) => return Err(AdmError::config(key, "missing mandatory key")),
        };
        resolved.push((key.to_string(), value));
    }
    build(resolved)
}

struct Values<'a>(&'a [(String, String)]);

impl Values<'_> {
    fn raw(&self, key: &str) -> &str {
        &self.0.iter().find(|(k, _)| k == key).expect("schema key").1
    }

    fn real(&self, key: &str) -> Result<f64> {
        parse_real(self.raw(key)).ok_or_else(|| AdmError::config(key, format!("expected a real number, got `{}`", self.raw(key))))
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v = self.real(key)?;
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(AdmError::config(key, format!("must be positive, got {v}")))
        }
    }

    fn integer(&self, key: &str) -> Result<u64> {
        self.raw(key)
            .parse()
            .map_err(|_| AdmError::config(key, format!("expected a nonnegative integer, got `{}`", self.raw(key))))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(AdmError::config(key, format!("expected true or false, got `{other}`"))),
        }
    }

    fn wavevector(&self, key: &str) -> Result<(i64, i64)> {
        let raw = self.raw(key).trim_matches(|c| c == '(' || c == ')');
        let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [a, b] => match (a.parse(), b.parse()) {
                (Ok(a), Ok(b)) if (a, b) != (0, 0) => Ok((a, b)),
                _ => Err(AdmError::config(key, format!("expected a nonzero integer pair, got `{raw}`"))),
            },
            _ => Err(AdmError::config(key, format!("expected `k1,k2`, got `{raw}`"))),
        }
    }

    fn field(&self, section: &str, allow_velocity: bool) -> Result<FieldSpec> {
        let key = |name: &str| format!("{section}.{name}");
        let amplitude = self.real(&key("amplitude"))?;
        match self.raw(&key("kind")) {
            "zero" => Ok(FieldSpec::Zero),
            "taylor_green" if allow_velocity => Ok(FieldSpec::TaylorGreen { amplitude }),
            "single_mode" => {
                let target = if allow_velocity {
                    match self.raw(&key("target")) {
                        "scalar" => Target::Scalar,
                        "velocity" => Target::Velocity,
                        other => return Err(AdmError::config(key("target"), format!("expected scalar or velocity, got `{other}`"))),
                    }
                } else {
                    Target::Scalar
                };
                Ok(FieldSpec::SingleMode {
                    k: self.wavevector(&key("k"))?,
                    amplitude,
                    target,
                })
            }
            "random_band" => Ok(FieldSpec::RandomBand {
                seed: self.integer(&key("seed"))?,
                spectrum_slope: self.real(&key("spectrum_slope"))?,
                max_ksq: self.real(&key("max_ksq"))?,
                amplitude,
            }),
            other => Err(AdmError::config(key("kind"), format!("unsupported field kind `{other}`"))),
        }
    }
}

/// Reals, with `pi`, `2pi` and `2*pi` spellings and `inf`.
fn parse_real(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Some(v);
    }
    let lower = t.to_ascii_lowercase();
    let stem = lower.strip_suffix("pi")?;
    let stem = stem.trim().trim_end_matches('*').trim();
    let factor = if stem.is_empty() { 1.0 } else { stem.parse::<f64>().ok()? };
    Some(factor * std::f64::consts::PI)
}

fn build(resolved: Vec<(String, String)>) -> Result<RunConfig> {
    let v = Values(&resolved);
    let experiment = match v.raw("experiment") {
        "" => None,
        name => Some(Experiment::parse(name).ok_or_else(|| {
            AdmError::config("experiment", format!("expected simulate, gap, squeeze or verify-ops, got `{name}`"))
        })?),
    };
    let side_length = v.positive("grid.L")?;
    let modes = v.integer("grid.M")? as usize;
    if modes < 4 || !modes.is_multiple_of(2) {
        return Err(AdmError::config("grid.M", format!("must be an even integer ≥ 4, got {modes}")));
    }
    let eta_reduction = match v.raw("params.eta_reduction") {
        "min" => EtaReduction::Min,
        "euclidean" => EtaReduction::Euclidean,
        other => return Err(AdmError::config("params.eta_reduction", format!("expected min or euclidean, got `{other}`"))),
    };
    let scheme = match v.raw("integrator.scheme") {
        "if_rk2" => Scheme::IfRk2,
        "if_euler" => Scheme::IfEuler,
        other => return Err(AdmError::config("integrator.scheme", format!("expected if_rk2 or if_euler, got `{other}`"))),
    };
    let system = |key: &str| match v.raw(key) {
        "full" => Ok(System::Full),
        "prepared" => Ok(System::Prepared),
        "diffusion" => Ok(System::Diffusion),
        other => Err(AdmError::config(key, format!("expected full, prepared or diffusion, got `{other}`"))),
    };
    let integrator = IntegratorConfig {
        dt: v.positive("integrator.dt")?,
        t_end: v.positive("integrator.t_end")?,
        scheme,
        observer_stride: v.integer("integrator.observer_stride")? as usize,
    };
    integrator
        .validate()
        .map_err(|e| AdmError::config("integrator", e.to_string()))?;
    let forcing_applies_to = match v.raw("forcing.applies_to") {
        "f" => ForcingTarget::F,
        "g" => ForcingTarget::G,
        other => return Err(AdmError::config("forcing.applies_to", format!("expected f or g, got `{other}`"))),
    };
    let cutoff_eigenvalue = match v.raw("squeeze.cutoff_eigenvalue") {
        "auto" => None,
        _ => Some(v.positive("squeeze.cutoff_eigenvalue")?),
    };
    let alphas = v
        .raw("verify.alphas")
        .split(',')
        .map(|s| parse_real(s).filter(|a| *a > 0.0))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| AdmError::config("verify.alphas", "expected a comma-separated list of positive reals"))?;

    let config = RunConfig {
        experiment,
        side_length,
        modes,
        nu: v.positive("params.nu")?,
        kappa: v.positive("params.kappa")?,
        alpha: v.positive("params.alpha")?,
        order: v.integer("params.N")? as usize,
        cutoff_radius: v.positive("params.cutoff_radius")?,
        gamma: v.positive("params.gamma")?,
        lipschitz_c: v.positive("params.lipschitz_c")?,
        c4: v.positive("params.c4")?,
        eta_reduction,
        integrator,
        system: system("integrator.system")?,
        initial: v.field("initial", true)?,
        forcing: v.field("forcing", false)?,
        forcing_applies_to,
        output: OutputConfig {
            snapshot_stride: v.integer("output.snapshot_stride")? as usize,
            final_snapshot: v.flag("output.final_snapshot")?,
        },
        gap: GapConfig {
            calibrate: v.flag("gap.calibrate")?,
            calibration_samples: v.integer("gap.calibration_samples")? as usize,
            seed: v.integer("gap.seed")?,
        },
        squeeze: SqueezeConfig {
            pairs: v.integer("squeeze.pairs")? as usize,
            seed: v.integer("squeeze.seed")?,
            calibrate: v.flag("squeeze.calibrate")?,
            calibration_samples: v.integer("squeeze.calibration_samples")? as usize,
            base_radius: v.positive("squeeze.base_radius")?,
            perturbation: v.positive("squeeze.perturbation")?,
            cutoff_eigenvalue,
            system: system("squeeze.system")?,
        },
        verify: VerifyConfig {
            alphas,
            max_order: v.integer("verify.max_order")? as usize,
            seed: v.integer("verify.seed")?,
            samples: v.integer("verify.samples")? as usize,
        },
        resolved: resolved.clone(),
    };
    if config.gap.calibrate && config.gap.calibration_samples < 100 {
        return Err(AdmError::config("gap.calibration_samples", "must be at least 100"));
    }
    if config.squeeze.calibrate && config.squeeze.calibration_samples < 100 {
        return Err(AdmError::config("squeeze.calibration_samples", "must be at least 100"));
    }
    Ok(config)
}

impl RunConfig {
    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.side_length, self.modes).map_err(|e| AdmError::config("grid", e.to_string()))
    }

    /// The forcing `f` on `grid`.
    pub fn forcing_field(&self, grid: &TorusGrid) -> Result<SpectralScalar> {
        let field = crate::init::forcing_field(grid, &self.forcing).map_err(|e| AdmError::config("forcing.kind", e.to_string()))?;
        Ok(match self.forcing_applies_to {
            ForcingTarget::F => field,
            ForcingTarget::G => MultiplierSpec::helmholtz(self.alpha).apply(&field),
        })
    }

    pub fn model_params(&self, grid: &TorusGrid) -> Result<ModelParams> {
        let mut p = ModelParams::new(self.forcing_field(grid)?, self.nu, self.kappa, self.alpha, self.order);
        p.cutoff_radius = self.cutoff_radius;
        p.gamma = self.gamma;
        p.lipschitz_c = self.lipschitz_c;
        p.c4 = self.c4;
        p.eta_reduction = self.eta_reduction;
        Ok(p)
    }

    /// Resolved value of a key.
    pub fn value(&self, key: &str) -> Option<&str> {
        self.resolved.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}
