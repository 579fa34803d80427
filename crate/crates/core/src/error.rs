use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("field length {got} does not match grid with {expected} cells")]
    LengthMismatch { expected: usize, got: usize },

    #[error("negative concentration {value} in cell {cell}")]
    NegativeConcentration { cell: usize, value: f64 },

    #[error("state violates the conservation laws: {0}")]
    ConservationMismatch(String),

    #[error("time step underflow at t={t}: dt={dt} below floor (min conc {min_conc}, max conc {max_conc})")]
    StepUnderflow {
        t: f64,
        dt: f64,
        min_conc: f64,
        max_conc: f64,
    },

    #[error("no informative samples: {0}")]
    NoInformativeSamples(String),

    #[error("too few qualifying points for a rate fit: {0}")]
    TooFewPoints(usize),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
