//! Detection geometries for an isotropic 3D packet pair.
//!
//! The 3D state factorizes into a two-packet profile along the split axis
//! and single Gaussians along the other two axes; only `z` feels gravity.
//! Integrating the normal current over an infinite detection plane leaves
//! a 1D current:
//!
//! | scenario | split | plane      | reduces to                         |
//! |----------|-------|------------|------------------------------------|
//! | `pi1`    | z     | XY at z=H  | cat current at `H`                 |
//! | `pi2`    | z     | YZ at x=X  | single free packet current at `X`  |
//! | `pi3`    | x     | XY at z=H  | single falling packet current at `H` |
//! | `pi4`    | x     | YZ at x=X  | cat current with `g = 0` at `X`    |
//!
//! [`surface_flux`] integrates the 3D current numerically, without using
//! the factorization, to certify the table.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::analytic;
use crate::current::{quantum_tof, TofSignal};
use crate::error::ConfigError;
use crate::model::{CatConfig, Gravity, TimeGrid, ValidatedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SplitAxis {
    /// Packets separated along gravity.
    Vertical,
    /// Packets separated along `x`.
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DetectionPlane {
    /// Horizontal plane `z = H`.
    Xy,
    /// Vertical plane `x = X`.
    Yz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Scenario {
    pub split: SplitAxis,
    pub plane: DetectionPlane,
}

impl Scenario {
    pub const PI1: Self = Self::new(SplitAxis::Vertical, DetectionPlane::Xy);
    pub const PI2: Self = Self::new(SplitAxis::Vertical, DetectionPlane::Yz);
    pub const PI3: Self = Self::new(SplitAxis::Horizontal, DetectionPlane::Xy);
    pub const PI4: Self = Self::new(SplitAxis::Horizontal, DetectionPlane::Yz);
    pub const ALL: [Self; 4] = [Self::PI1, Self::PI2, Self::PI3, Self::PI4];

    pub const fn new(split: SplitAxis, plane: DetectionPlane) -> Self {
        Self { split, plane }
    }

    pub fn name(self) -> &'static str {
        match (self.split, self.plane) {
            (SplitAxis::Vertical, DetectionPlane::Xy) => "pi1",
            (SplitAxis::Vertical, DetectionPlane::Yz) => "pi2",
            (SplitAxis::Horizontal, DetectionPlane::Xy) => "pi3",
            (SplitAxis::Horizontal, DetectionPlane::Yz) => "pi4",
        }
    }

    /// 1D configuration whose current equals the plane-integrated flux.
    ///
    /// `x` is the position of a `Yz` plane and is ignored for `Xy`.
    pub fn reduced_config(self, cfg: &ValidatedConfig, x: f64) -> Result<ValidatedConfig, ConfigError> {
        match (self.split, self.plane) {
            (SplitAxis::Vertical, DetectionPlane::Xy) => Ok(cfg.clone()),
            (SplitAxis::Vertical, DetectionPlane::Yz) => {
                cfg.map(|c| single(c).with_gravity(Gravity::none()).with_detector(x))
            }
            (SplitAxis::Horizontal, DetectionPlane::Xy) => cfg.map(single),
            (SplitAxis::Horizontal, DetectionPlane::Yz) => {
                cfg.map(|c| c.with_gravity(Gravity::none()).with_detector(x))
            }
        }
    }

    pub fn evaluate(self, grid: TimeGrid, cfg: &ValidatedConfig, x: f64) -> Result<TofSignal, ConfigError> {
        Ok(quantum_tof(grid, &self.reduced_config(cfg, x)?, false))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario '{s}' (expected pi1, pi2, pi3 or pi4)"))
    }
}

/// One normalized packet at the origin.
fn single(c: CatConfig) -> CatConfig {
    let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
    c.with_separation(0.0).with_amplitudes(a, a)
}

/// Vertical split, horizontal plane: the cat current at `H`.
pub fn pi1(grid: TimeGrid, cfg: &ValidatedConfig) -> TofSignal {
    quantum_tof(grid, cfg, false)
}

/// Vertical split, plane `x = X`: free expansion of one packet along `x`.
pub fn pi2(grid: TimeGrid, cfg: &ValidatedConfig, x: f64) -> Result<TofSignal, ConfigError> {
    Scenario::PI2.evaluate(grid, cfg, x)
}

/// Horizontal split, plane `z = H`: the single-packet falling pulse.
pub fn pi3(grid: TimeGrid, cfg: &ValidatedConfig) -> Result<TofSignal, ConfigError> {
    Scenario::PI3.evaluate(grid, cfg, 0.0)
}

/// Horizontal split, plane `x = X`: the cat current without gravity.
pub fn pi4(grid: TimeGrid, cfg: &ValidatedConfig, x: f64) -> Result<TofSignal, ConfigError> {
    Scenario::PI4.evaluate(grid, cfg, x)
}

/// The 3D product state of a scenario.
struct State3d {
    split: SplitAxis,
    cat: ValidatedConfig,
    free_cat: ValidatedConfig,
    free_single: ValidatedConfig,
    falling_single: ValidatedConfig,
}

impl State3d {
    fn new(split: SplitAxis, cfg: &ValidatedConfig) -> Result<Self, ConfigError> {
        Ok(Self {
            split,
            cat: cfg.clone(),
            free_cat: cfg.map(|c| c.with_gravity(Gravity::none()))?,
            free_single: cfg.map(|c| single(c).with_gravity(Gravity::none()))?,
            falling_single: cfg.map(single)?,
        })
    }

    fn psi(&self, x: f64, y: f64, z: f64, t: f64) -> Complex64 {
        let (fx, fz) = match self.split {
            SplitAxis::Vertical => (
                analytic::cat_amplitude(x, t, &self.free_single),
                analytic::cat_amplitude(z, t, &self.cat),
            ),
            SplitAxis::Horizontal => (
                analytic::cat_amplitude(x, t, &self.free_cat),
                analytic::cat_amplitude(z, t, &self.falling_single),
            ),
        };
        fx * analytic::cat_amplitude(y, t, &self.free_single) * fz
    }

    /// Window holding the packets along `x`, `y` and `z` out to `±8σ(t)`.
    fn windows(&self, t: f64) -> [(f64, f64); 3] {
        let w = 8.0;
        let free = analytic::support_window(t, w, &self.free_single);
        match self.split {
            SplitAxis::Vertical => [free, free, analytic::support_window(t, w, &self.cat)],
            SplitAxis::Horizontal => [
                analytic::support_window(t, w, &self.free_cat),
                free,
                analytic::support_window(t, w, &self.falling_single),
            ],
        }
    }
}

/// Points per transverse axis in [`surface_flux`].
pub const SURFACE_POINTS: usize = 256;

/// Normal-derivative step for the fourth-order stencil in [`surface_flux`].
pub const NORMAL_STEP: f64 = 2e-10;

/// Brute-force flux of the 3D current through the scenario's plane.
///
/// The plane sits at `z = H` (from `cfg`) for `Xy` and at `x = X` for
/// `Yz`. The normal current `(ħ/m) Im(Ψ* ∂ₙΨ)` of the full product state
/// is integrated by the trapezoid rule on a `256 × 256` grid spanning
/// `±8σ(t)` around the packets; `∂ₙ` is a fourth-order central difference.
pub fn surface_flux(
    scenario: Scenario,
    cfg: &ValidatedConfig,
    x_plane: f64,
    t: f64,
) -> Result<f64, ConfigError> {
    let state = State3d::new(scenario.split, cfg)?;
    let [wx, wy, wz] = state.windows(t);
    let (wa, wb) = match scenario.plane {
        DetectionPlane::Xy => (wx, wy),
        DetectionPlane::Yz => (wy, wz),
    };
    let h = NORMAL_STEP;
    let n = SURFACE_POINTS;
    let (da, db) = ((wa.1 - wa.0) / (n - 1) as f64, (wb.1 - wb.0) / (n - 1) as f64);
    let trap = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut total = 0.0;
    for i in 0..n {
        let a = wa.0 + i as f64 * da;
        for j in 0..n {
            let b = wb.0 + j as f64 * db;
            let at = |s: f64| match scenario.plane {
                DetectionPlane::Xy => state.psi(a, b, cfg.detector() + s, t),
                DetectionPlane::Yz => state.psi(x_plane + s, a, b, t),
            };
            let psi = at(0.0);
            let grad = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
            total += trap(i) * trap(j) * (psi.conj() * grad).im;
        }
    }
    Ok(cfg.hbar() / cfg.mass() * total * da * db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::current::{auto_grid, direct_current};
    use crate::model::sodium;

    fn standard_cat(d: f64) -> ValidatedConfig {
        CatConfig::new(sodium(), 1e-6, d, -0.01).validate().unwrap()
    }

    #[test]
    fn exactly_four_named_scenarios() {
        let names: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
        assert_eq!(names, ["pi1", "pi2", "pi3", "pi4"]);
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("pi5".parse::<Scenario>().is_err());
    }

    #[test]
    fn pi1_is_quantum_tof() {
        let c = standard_cat(50e-6);
        let grid = auto_grid(&c);
        let a = pi1(grid, &c);
        let b = quantum_tof(grid, &c, false);
        let peak = b.peak().1;
        for (x, y) in a.pi.iter().zip(&b.pi) {
            assert!((x - y).abs() <= 1e-14 * peak);
        }
    }

    #[test]
    fn pi3_is_single_packet_pulse() {
        let c = standard_cat(50e-6);
        let grid = auto_grid(&c);
        let a = pi3(grid, &c).unwrap();
        let b = quantum_tof(grid, &standard_cat(0.0), false);
        let peak = b.peak().1;
        for (x, y) in a.pi.iter().zip(&b.pi) {
            assert!((x - y).abs() <= 1e-12 * peak);
        }
    }

    #[test]
    fn pi3_ignores_amplitudes() {
        let c = standard_cat(50e-6)
            .map(|c| c.with_amplitudes(Complex64::new(0.6, 0.0), Complex64::new(0.0, -0.8)))
            .unwrap();
        let grid = auto_grid(&standard_cat(0.0));
        let a = pi3(grid, &c).unwrap();
        let b = quantum_tof(grid, &standard_cat(0.0), false);
        assert_eq!(a.pi, b.pi);
    }

    #[test]
    fn pi4_is_gravity_free_cat_at_x() {
        let c = standard_cat(20e-6);
        let x = -0.01;
        let free = c.map(|c| c.with_gravity(Gravity::none()).with_detector(x)).unwrap();
        let grid = auto_grid(&free);
        let a = pi4(grid, &c, x).unwrap();
        let b = quantum_tof(grid, &free, false);
        assert_eq!(a.pi, b.pi);
    }

    #[test]
    fn pi2_vanishes_at_start_and_is_symmetric() {
        let c = standard_cat(50e-6);
        let grid = TimeGrid::new(0.0, 0.5, 501).unwrap();
        let a = pi2(grid, &c, 100e-6).unwrap();
        let b = pi2(grid, &c, -100e-6).unwrap();
        assert_eq!(a.pi[0], 0.0);
        for (x, y) in a.pi.iter().zip(&b.pi) {
            assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-300));
        }
    }

    fn check_surface(scenario: Scenario, cfg: &ValidatedConfig, x: f64, times: &[f64]) {
        let reduced = scenario.reduced_config(cfg, x).unwrap();
        let scale = times
            .iter()
            .map(|&t| direct_current(reduced.detector(), t, &reduced).abs())
            .fold(0.0, f64::max);
        for &t in times {
            let brute = surface_flux(scenario, cfg, x, t).unwrap();
            let reduced_j = direct_current(reduced.detector(), t, &reduced);
            assert!(
                (brute - reduced_j).abs() <= 1e-6 * scale,
                "{scenario} t={t}: {brute} vs {reduced_j}"
            );
        }
    }

    #[test]
    fn pi3_surface_flux() {
        check_surface(Scenario::PI3, &standard_cat(50e-6), 0.0, &[0.0449, 0.0452]);
    }

    #[test]
    fn pi2_surface_flux() {
        check_surface(Scenario::PI2, &standard_cat(50e-6), 100e-6, &[0.03, 0.06]);
    }
}
