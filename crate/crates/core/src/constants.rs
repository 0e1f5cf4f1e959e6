//! Physical constants in SI units.
//!
//! Provenance for every value lives in `data/constants.json`; a unit test
//! keeps the two in sync.

/// Reduced Planck constant (J·s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Unified atomic mass unit (kg), CODATA 2018.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Boltzmann constant (J/K), exact.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Mass of a neutral ²³Na atom in atomic mass units (AME2020).
pub const SODIUM_23_MASS_U: f64 = 22.989_769_282_0;

/// Mass of a neutral ²³Na atom (kg).
pub const SODIUM_23_MASS: f64 = SODIUM_23_MASS_U * ATOMIC_MASS_UNIT;

/// Default gravitational acceleration (m/s²).
pub const STANDARD_GRAVITY: f64 = 9.8;

/// Raw JSON provenance file, embedded at compile time.
pub const CONSTANTS_JSON: &str = include_str!("../data/constants.json");
