//! Pseudo-spectral simulator for the two-dimensional mean Boussinesq
//! approximate-deconvolution model on the periodic square.
//!
//! Fields are stored as half-spectrum Fourier coefficients normalized so
//! that `v̂₀` is the spatial mean. Nonlinear products are evaluated on the
//! grid and dealiased by the two-thirds rule.

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod init;
pub mod integrate;
pub mod io;
pub mod model;
pub mod operators;
pub mod oracle;
pub mod squeeze;
mod transform;
pub mod verify;

pub use diagnostics::{DiagnosticsRecorder, DiagnosticsRow};
pub use error::{AdmError, Result};
pub use field::{SpectralField, SpectralScalar, SpectralVector};
pub use grid::{Eigenvalue, TorusGrid};
pub use integrate::{simulate, IntegratorConfig, Observer, Scheme, Stepper, System, Trajectory};
pub use model::{EtaReduction, FilteredState, Model, ModelParams, State};
pub use operators::MultiplierSpec;
pub use squeeze::{ConeSpec, PairExperimentResult};
