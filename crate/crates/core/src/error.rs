//! Crate-wide error type.
//!
//! Variant names double as the machine-readable error codes emitted by the
//! CLI, so keep them stable.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("turning fraction {alpha} of corner {index} is outside (-1, 1) or zero")]
    AngleOutOfRange { index: usize, alpha: f64 },

    #[error("winding mismatch: {detail}")]
    WindingMismatch { detail: String },

    #[error("corner angles must be strictly increasing in (0, 2pi]; offending index {index}")]
    NonmonotoneCorners { index: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("quadrature under-resolved: estimated error {estimate:.3e} exceeds {tolerance:.1e} ({context})")]
    QuadratureUnderresolved {
        estimate: f64,
        tolerance: f64,
        context: String,
    },

    #[error("point {re} + {im}i is not strictly inside the unit disc")]
    OutsideDisc { re: f64, im: f64 },

    #[error("conformal inversion diverged for x = ({x1}, {x2}) after {iterations} iterations")]
    InversionDiverged { x1: f64, x2: f64, iterations: usize },

    #[error("resolution too coarse: {particles} particles (need at least 4)")]
    ResolutionTooCoarse { particles: usize },

    #[error("particle {index} reached the unit circle during a step (|z| = {abs_z})")]
    ParticleExited { index: usize, abs_z: f64 },

    #[error("time step collapsed below 1e-14 at t = {t}")]
    StepCollapse { t: f64 },

    #[error("insufficient samples: {found} found, {needed} needed ({context})")]
    InsufficientSamples {
        found: usize,
        needed: usize,
        context: String,
    },

    #[error("field is not a nonnegative field: {0}")]
    SignFlagMissing(String),

    #[error("invalid configuration value: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable error code used in the CLI's error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::AngleOutOfRange { .. } => "AngleOutOfRange",
            Error::WindingMismatch { .. } => "WindingMismatch",
            Error::NonmonotoneCorners { .. } => "NonmonotoneCorners",
            Error::InvalidDomain(_) => "InvalidDomain",
            Error::QuadratureUnderresolved { .. } => "QuadratureUnderresolved",
            Error::OutsideDisc { .. } => "OutsideDisc",
            Error::InversionDiverged { .. } => "InversionDiverged",
            Error::ResolutionTooCoarse { .. } => "ResolutionTooCoarse",
            Error::ParticleExited { .. } => "ParticleExited",
            Error::StepCollapse { .. } => "StepCollapse",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::SignFlagMissing(_) => "SignFlagMissing",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Parse(_) => "ParseError",
            Error::Schema(_) => "SchemaError",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
