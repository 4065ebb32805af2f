use thiserror::Error;

use crate::spin::HalfInt;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spin 2S = {two_s} does not host a limit cycle (need 2S >= 2)")]
    InvalidSpin { two_s: u32 },

    #[error("magnetic quantum number m = {m} is outside the spin-{s} ladder")]
    OutOfRange { s: HalfInt, m: HalfInt },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("Liouvillian null space has dimension {dimension}, expected 1")]
    DegenerateNullSpace { dimension: usize },

    #[error("null vector has vanishing trace ({trace:e}); cannot normalize")]
    NonNormalizable { trace: f64 },

    #[error("undriven steady state is not diagonal (largest coherence {max_offdiag:e})")]
    NonDiagonalLimitCycle { max_offdiag: f64 },

    #[error("vanishing denominator in first-order coherence at n = {n}")]
    Singular { n: HalfInt },

    #[error("calibration failed: {0}")]
    Calibration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
