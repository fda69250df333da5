//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the supported regime (bad q, bad hexagon, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A point or index lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A square root was requested of a negative quantity. In the imaginary
    /// regime this never happens, so it points at a regime violation.
    #[error("negative radicand in {what}: {value}")]
    NegativeRadicand { what: String, value: String },

    /// A computation would be too large to run at desk scale.
    #[error("size guard: {0}")]
    SizeGuard(String),

    /// The request falls outside the parameter zone supported by the kernel code.
    #[error("outside supported zone: {0}")]
    OutOfZone(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// A piecewise-linear branch decision is too close to a kink to be trusted.
    #[error("near tie at a kink: {0}")]
    NearTie(String),
}

pub type Result<T> = std::result::Result<T, Error>;
