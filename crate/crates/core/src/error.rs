use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The k = 0 mode is exactly conserved; A_k and the kernels built on it diverge there.
    #[error("singular mode: quantity diverges at k = 0 (conserved mode)")]
    SingularMode,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("lattice geometry mismatch between fields")]
    GeometryMismatch,

    #[error("invalid lattice geometry: {0}")]
    InvalidGeometry(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("history too short: need at least {needed} samples, got {got}")]
    TooShortHistory { needed: usize, got: usize },

    #[error("max lag {max_lag} out of range for a history of length {len}")]
    LagRange { max_lag: usize, len: usize },

    #[error("fit window has {usable} usable lags, need at least 3")]
    InsufficientWindow { usable: usize },

    #[error("history grids differ: {0}")]
    GridMismatch(String),

    #[error("spectrum is not Hermitian (residual {residual:e})")]
    NonHermitian { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
