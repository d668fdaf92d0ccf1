//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("missing required config key `{0}`")]
    MissingKey(String),

    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    #[error("grid inconsistency in `{field}`: {reason}")]
    Grid { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change of F^2 - 1 found below the cutoff {cutoff}")]
    BracketNotFound { cutoff: f64 },

    #[error("resonance on grid at omega = {omega}: |denominator| = {denominator:e}; shift the grid offset")]
    ResonanceOnGrid { omega: f64, denominator: f64 },

    #[error("mirror spectra not converged: halving the resolution shifts in-band values by {shift:.3e} (> {tolerance:e})")]
    NotConverged { shift: f64, tolerance: f64 },

    #[error("frequency {omega} lies outside the tabulated band [{min}, {max}]")]
    OutOfBand { omega: f64, min: f64, max: f64 },

    #[error("lag {lag} exceeds the kernel table horizon {horizon}")]
    LagRangeExceeded { lag: f64, horizon: f64 },

    #[error("stability bound `{bound}` violated: {value:.4} >= {limit}")]
    Stability {
        bound: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("grid under-resolved: {0}")]
    UnderResolved(String),

    #[error("boundary mass {mass:e} exceeds {limit:e}; enlarge the phase-space extents")]
    BoundaryMass { mass: f64, limit: f64 },

    #[error("insufficient decay: visibility only fell to {floor:.3} (needs < {required:.3})")]
    InsufficientDecay { floor: f64, required: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        field: field.to_string(),
        reason: reason.into(),
    }
}

pub(crate) fn grid_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Grid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl Error {
    /// Errors caused by the invocation or config rather than by the physics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::MissingKey(_) | Error::UnknownKeys(_) | Error::InvalidParam { .. } | Error::Grid { .. }
        )
    }
}
