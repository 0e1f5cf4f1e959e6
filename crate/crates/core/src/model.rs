//! Particles, experiment configurations and time grids.
//!
//! Everything here is stored in SI units. Conversions from human units
//! (μm, cm, amu, …) happen only in the command-line layer.
//!
//! The vertical coordinate `z` points up. Gravity is a non-negative scalar
//! `g` and the potential is `V = m g z`, so packets accelerate toward
//! negative `z`; detectors below the initial cloud sit at negative `z`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::constants::{HBAR, SODIUM_23_MASS, STANDARD_GRAVITY};
use crate::error::ConfigError;

/// A falling species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    label: String,
    mass: f64,
}

impl Particle {
    pub fn new(label: impl Into<String>, mass: f64) -> Result<Self, ConfigError> {
        if !mass.is_finite() {
            return Err(ConfigError::NonFinite("mass"));
        }
        if mass <= 0.0 {
            return Err(ConfigError::NonPositiveMass(mass));
        }
        Ok(Self {
            label: label.into(),
            mass,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Mass in kg.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Same species label, mass multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ConfigError> {
        let label = if factor == 1.0 {
            self.label.clone()
        } else {
            format!("{}x{}", factor, self.label)
        };
        Self::new(label, self.mass * factor)
    }
}

/// A neutral ²³Na atom.
pub fn sodium() -> Particle {
    Particle {
        label: "Na-23".to_string(),
        mass: SODIUM_23_MASS,
    }
}

/// Gravitational acceleration magnitude (m/s²). Zero is the gravity-free case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gravity(f64);

impl Gravity {
    pub fn new(g: f64) -> Result<Self, ConfigError> {
        if !g.is_finite() {
            return Err(ConfigError::NonFinite("g"));
        }
        if g < 0.0 {
            return Err(ConfigError::NegativeGravity(g));
        }
        Ok(Self(g))
    }

    pub const fn none() -> Self {
        Self(0.0)
    }

    pub fn g(self) -> f64 {
        self.0
    }
}

impl Default for Gravity {
    fn default() -> Self {
        Self(STANDARD_GRAVITY)
    }
}

/// Full parameterization of a falling two-packet superposition.
///
/// `Ψ(z,0) = 𝒩 [c1 ψ₁(z,0) + c2 ψ₂(z,0)]` with ψ₁ centred at `z = 0`
/// and ψ₂ at `z = −d`, both Gaussians of width `sigma0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatConfig {
    pub particle: Particle,
    /// Initial Gaussian width σ₀ (m).
    pub sigma0: f64,
    /// Packet separation along `z` (m).
    pub d: f64,
    pub c1: Complex64,
    pub c2: Complex64,
    pub gravity: Gravity,
    /// Detector plane coordinate `H` (m).
    pub detector: f64,
    hbar: f64,
}

impl CatConfig {
    /// Equal-weight cat state, `c1 = c2 = 1/√2`, standard gravity.
    pub fn new(particle: Particle, sigma0: f64, d: f64, detector: f64) -> Self {
        Self {
            particle,
            sigma0,
            d,
            c1: Complex64::new(FRAC_1_SQRT_2, 0.0),
            c2: Complex64::new(FRAC_1_SQRT_2, 0.0),
            gravity: Gravity::default(),
            detector,
            hbar: HBAR,
        }
    }

    pub fn with_gravity(mut self, gravity: Gravity) -> Self {
        self.gravity = gravity;
        self
    }

    pub fn with_amplitudes(mut self, c1: Complex64, c2: Complex64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self
    }

    pub fn with_detector(mut self, detector: f64) -> Self {
        self.detector = detector;
        self
    }

    pub fn with_separation(mut self, d: f64) -> Self {
        self.d = d;
        self
    }

    /// Overrides ħ. Only for scale studies and negative controls in tests.
    #[cfg(test)]
    pub(crate) fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn validate(self) -> Result<ValidatedConfig, ConfigError> {
        validate_config(self)
    }
}

/// A [`CatConfig`] whose invariants have been checked, with the derived
/// normalization attached.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    cfg: CatConfig,
    normalization: f64,
}

/// Checks every invariant and attaches `𝒩`.
pub fn validate_config(cfg: CatConfig) -> Result<ValidatedConfig, ConfigError> {
    let finite = [
        ("sigma0", cfg.sigma0),
        ("d", cfg.d),
        ("detector", cfg.detector),
        ("c1", cfg.c1.re),
        ("c1", cfg.c1.im),
        ("c2", cfg.c2.re),
        ("c2", cfg.c2.im),
    ];
    for (name, v) in finite {
        if !v.is_finite() {
            return Err(ConfigError::NonFinite(name));
        }
    }
    // Re-run the constructors so hand-built structs are checked too.
    Particle::new(cfg.particle.label.clone(), cfg.particle.mass)?;
    Gravity::new(cfg.gravity.g())?;
    if cfg.sigma0 <= 0.0 {
        return Err(ConfigError::NonPositiveWidth(cfg.sigma0));
    }
    if cfg.d < 0.0 {
        return Err(ConfigError::NegativeSeparation(cfg.d));
    }
    if cfg.c1.norm_sqr() + cfg.c2.norm_sqr() == 0.0 {
        return Err(ConfigError::ZeroAmplitudes);
    }
    let norm_sq = superposition_norm_sq(cfg.c1, cfg.c2, cfg.d, cfg.sigma0);
    if !(norm_sq > 1e-300) {
        return Err(ConfigError::VanishingState);
    }
    Ok(ValidatedConfig {
        normalization: 1.0 / norm_sq.sqrt(),
        cfg,
    })
}

/// `|c1|² + |c2|² + 2 Re(c1* c2) exp(−d²/8σ₀²)`, the squared norm of the
/// unnormalized superposition.
fn superposition_norm_sq(c1: Complex64, c2: Complex64, d: f64, sigma0: f64) -> f64 {
    let overlap = (-d * d / (8.0 * sigma0 * sigma0)).exp();
    c1.norm_sqr() + c2.norm_sqr() + 2.0 * (c1.conj() * c2).re * overlap
}

impl ValidatedConfig {
    pub fn config(&self) -> &CatConfig {
        &self.cfg
    }

    pub fn into_config(self) -> CatConfig {
        self.cfg
    }

    /// Normalization constant `𝒩`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn mass(&self) -> f64 {
        self.cfg.particle.mass()
    }

    pub fn hbar(&self) -> f64 {
        self.cfg.hbar
    }

    pub fn sigma0(&self) -> f64 {
        self.cfg.sigma0
    }

    pub fn d(&self) -> f64 {
        self.cfg.d
    }

    pub fn g(&self) -> f64 {
        self.cfg.gravity.g()
    }

    pub fn detector(&self) -> f64 {
        self.cfg.detector
    }

    pub fn c1(&self) -> Complex64 {
        self.cfg.c1
    }

    pub fn c2(&self) -> Complex64 {
        self.cfg.c2
    }

    /// Returns a modified copy, re-validated.
    pub fn map(
        &self,
        f: impl FnOnce(CatConfig) -> CatConfig,
    ) -> Result<ValidatedConfig, ConfigError> {
        validate_config(f(self.cfg.clone()))
    }
}

/// Uniformly spaced sample times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_samples: usize) -> Result<Self, ConfigError> {
        if !(t_start.is_finite() && t_end.is_finite()) {
            return Err(ConfigError::NonFinite("time grid"));
        }
        if t_start < 0.0 || t_start >= t_end || n_samples < 2 {
            return Err(ConfigError::InvalidTimeGrid {
                t_start,
                t_end,
                n_samples,
            });
        }
        Ok(Self {
            t_start,
            t_end,
            n_samples,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_samples - 1) as f64
    }

    /// `i`-th sample time; the last sample is exactly `t_end`.
    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n_samples {
            self.t_end
        } else {
            self.t_start + i as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples).map(|i| self.time(i)).collect()
    }

    /// Same window with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_samples: (self.n_samples - 1) * factor + 1,
            ..*self
        }
    }
}
