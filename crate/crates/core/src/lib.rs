//! Quantum time-of-flight distributions of a freely falling two-packet
//! (Schrödinger-cat) matter wave.
//!
//! The arrival-time density at a detector plane `z = H` is the modulus of
//! the probability current, `Π(t) = |J(H, t)|`. Alongside it the crate
//! provides the classical ballistic baseline, the four 3D detection
//! geometries, a split-step grid propagator used as an independent oracle,
//! and fringe metrics with parameter sweeps.

pub mod analysis;
pub mod analytic;
pub mod classical;
pub mod cli;
pub mod constants;
pub mod current;
pub mod error;
pub mod geometry;
pub mod model;
pub mod oracle;
pub mod quad;

pub use error::{ClassicalError, ConfigError, OracleError, ResidualError};
pub use model::{sodium, validate_config, CatConfig, Gravity, Particle, TimeGrid, ValidatedConfig};
