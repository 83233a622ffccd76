use thiserror::Error;

pub type Result<T, E = AdmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AdmError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected} samples, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("CFL violation at t = {t}: dt = {dt} exceeds the advective limit {limit}")]
    CflViolation { t: f64, dt: f64, limit: f64 },

    #[error("non-finite state detected at t = {t}")]
    NonFinite { t: f64 },

    #[error(
        "no spectral gap exceeds {threshold}; largest gap is {largest_gap} \
         (between {lower} and {upper})"
    )]
    NoQualifyingGap {
        threshold: f64,
        largest_gap: f64,
        lower: f64,
        upper: f64,
    },

    #[error("empty series")]
    EmptySeries,

    #[error("grid too large for direct evaluation: M = {0} (limit 16)")]
    OracleGridTooLarge(usize),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AdmError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        AdmError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            AdmError::InvalidGrid(_) => "invalid_grid",
            AdmError::DimensionMismatch { .. } => "dimension_mismatch",
            AdmError::GridMismatch => "grid_mismatch",
            AdmError::InvalidArgument(_) => "invalid_argument",
            AdmError::CflViolation { .. } => "cfl_violation",
            AdmError::NonFinite { .. } => "non_finite",
            AdmError::NoQualifyingGap { .. } => "no_qualifying_gap",
            AdmError::EmptySeries => "empty_series",
            AdmError::OracleGridTooLarge(_) => "oracle_grid_too_large",
            AdmError::Config { .. } => "config",
            AdmError::Io(_) => "io",
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            AdmError::Config { .. } | AdmError::InvalidGrid(_) => 2,
            AdmError::CflViolation { .. } | AdmError::NonFinite { .. } => 3,
            _ => 1,
        }
    }
}
