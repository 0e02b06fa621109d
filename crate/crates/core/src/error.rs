use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("kernel expression error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("kernel is not finite at modes (b={b}, c={c}, a={a})")]
    NonFiniteKernel { b: usize, c: usize, a: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension {dim} exceeds the limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("mode index {index} out of range for {species} ({count} modes)")]
    ModeOutOfRange { species: &'static str, index: usize, count: usize },

    #[error("eigensolver did not converge: {converged}/{requested} pairs after {iterations} iterations (worst residual {residual:e})")]
    NonConvergence { requested: usize, converged: usize, iterations: usize, residual: f64 },

    #[error("no admissible coupling: {0}")]
    NoAdmissibleCoupling(String),

    #[error("dense linear algebra failed: {0}")]
    Linalg(String),

    #[error("spectral parameter lies within {distance:e} of the spectrum")]
    NearSpectrum { distance: f64 },

    #[error("sector split unavailable: {0}")]
    SectorSplit(String),

    #[error("config `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("operator file, line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.into(), reason: reason.into() }
    }

    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Parse { .. }
                | Error::NonFiniteKernel { .. }
                | Error::GridMismatch(_)
                | Error::DimensionTooLarge { .. }
                | Error::ModeOutOfRange { .. }
                | Error::NoAdmissibleCoupling(_)
                | Error::Config { .. }
                | Error::Format { .. }
        )
    }
}
