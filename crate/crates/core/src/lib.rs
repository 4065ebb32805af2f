//! Quantum synchronization of driven spin-S limit-cycle oscillators.
//!
//! The crate computes Lindblad steady states of a spin stabilized by the
//! shifted gain/loss jump operators `S_±(S_z - M)`, the Husimi-Q phase
//! distribution `S(φ)` used to measure synchronization to a semiclassical
//! signal, first-order perturbative coherences, and the dissipation-rate
//! ratios at which coherences interfere destructively (synchronization
//! blockade).

pub mod calibration;
pub mod error;
pub mod experiments;
pub mod lindblad;
pub mod measure;
pub mod numeric;
pub mod perturbative;
pub mod spin;

pub use error::{Error, Result};
