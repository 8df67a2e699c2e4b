use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("parity mismatch: expected {expected}, found {found}")]
    ParityMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("weight overflow at wavenumber index {mode}: exponent {exponent:.3} exceeds 30")]
    WeightOverflow { mode: i64, exponent: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("CFL violation at t = {t}: courant number {courant:.3} > 0.5")]
    Cfl { t: f64, courant: f64 },

    #[error("stiffness guard: dt = {dt} exceeds {limit} (eps^2 * safety / max|T|)")]
    Stiffness { dt: f64, limit: f64 },

    #[error("non-finite value in {what} at step {step}")]
    NonFinite { what: &'static str, step: usize },

    #[error("solvability violated for mode {mode}: defect {defect:.3e}")]
    Solvability { mode: i64, defect: f64 },

    #[error("norm series: {0}")]
    Series(String),

    #[error("insufficient sampling: {0}")]
    Sampling(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridMismatch => "grid_mismatch",
            Error::ParityMismatch { .. } => "parity_mismatch",
            Error::WeightOverflow { .. } => "weight_overflow",
            Error::InvalidInput(_) => "invalid_input",
            Error::Cfl { .. } => "cfl",
            Error::Stiffness { .. } => "stiffness",
            Error::NonFinite { .. } => "non_finite",
            Error::Solvability { .. } => "solvability",
            Error::Series(_) => "series",
            Error::Sampling(_) => "sampling",
            Error::Config { .. } => "config",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
