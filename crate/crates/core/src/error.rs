use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state is not on the switching surface (|s| = {0:e})")]
    NotOnSurface(f64),

    #[error("degenerate tangency at the switching surface (grad_s.f+ = {plus:e}, grad_s.f- = {minus:e})")]
    DegenerateTangency { plus: f64, minus: f64 },

    #[error("repelling switching surface: Filippov solution is not unique here")]
    RepellingSurface,

    #[error("system has no switching surface")]
    NoSurface,

    #[error("no return to the Poincaré section: {0}")]
    NoReturn(String),

    #[error("stationary set is empty")]
    EmptyStationarySet,

    #[error("missing periodic coordinate declaration")]
    MissingPeriodicCoordinate,

    #[error("jacobian disagrees with finite differences at {state:?} (entry {row},{col}: {analytic} vs {numeric})")]
    JacobianMismatch {
        state: Vec<f64>,
        row: usize,
        col: usize,
        analytic: f64,
        numeric: f64,
    },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {value}"),
        })
    }
}
