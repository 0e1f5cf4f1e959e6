//! Classical ballistic time-of-flight baseline.
//!
//! Atoms start from a Gaussian phase-space ensemble (position width `σ₀`,
//! velocity width `σ_v = √(kT/m)`) and fall freely. The arrival density at
//! `z = H` has the closed form
//!
//! ```text
//! 𝒟(t) = (2πt²)^(−1/2) [½gt²(2σ₀² + σ_v²t²) − Hσ_v²t²] / (σ₀² + σ_v²t²)^(3/2)
//!        · exp[−(H + ½gt²)² / 2(σ₀² + σ_v²t²)]
//! ```
//!
//! and is cross-checked against direct trajectory sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::constants::BOLTZMANN;
use crate::error::{ClassicalError, ConfigError};
use crate::model::{Particle, TimeGrid};
use crate::quad;

/// Samples drawn per independent random substream.
pub const MC_CHUNK: usize = 1 << 16;

/// A thermal cloud released at rest around `z = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalCloud {
    particle: Particle,
    sigma0: f64,
    temperature: f64,
}

impl ThermalCloud {
    pub fn new(particle: Particle, sigma0: f64, temperature: f64) -> Result<Self, ConfigError> {
        if !sigma0.is_finite() {
            return Err(ConfigError::NonFinite("sigma0"));
        }
        if !temperature.is_finite() {
            return Err(ConfigError::NonFinite("temperature"));
        }
        if sigma0 <= 0.0 {
            return Err(ConfigError::NonPositiveWidth(sigma0));
        }
        if temperature < 0.0 {
            return Err(ConfigError::NegativeTemperature(temperature));
        }
        Ok(Self {
            particle,
            sigma0,
            temperature,
        })
    }

    pub fn particle(&self) -> &Particle {
        &self.particle
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn sigma_v(&self) -> f64 {
        sigma_v(self)
    }

    /// Position variance at time `t`: `σ₀² + σ_v²t²`.
    fn variance(&self, t: f64) -> f64 {
        let sv = self.sigma_v();
        self.sigma0 * self.sigma0 + sv * sv * t * t
    }
}

/// Thermal velocity spread `√(kT/m)` (m/s).
pub fn sigma_v(cloud: &ThermalCloud) -> f64 {
    (BOLTZMANN * cloud.temperature / cloud.particle.mass()).sqrt()
}

/// Closed-form arrival density 𝒟(t) at `z = h` (1/s).
pub fn classical_distribution(
    t: f64,
    h: f64,
    cloud: &ThermalCloud,
    g: f64,
) -> Result<f64, ClassicalError> {
    if !(t > 0.0) {
        return Err(ClassicalError::NonPositiveTime(t));
    }
    let sv2 = cloud.sigma_v().powi(2);
    let s02 = cloud.sigma0 * cloud.sigma0;
    let var = cloud.variance(t);
    let drop = h + 0.5 * g * t * t;
    let numer = 0.5 * g * t * t * (2.0 * s02 + sv2 * t * t) - h * sv2 * t * t;
    Ok(numer / ((2.0 * PI * t * t).sqrt() * var.powf(1.5)) * (-drop * drop / (2.0 * var)).exp())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Fraction of the ensemble below `h` at time `t`,
/// `Φ((H + ½gt²) / √(σ₀² + σ_v²t²))`.
///
/// With `g > 0` and the cloud starting above the detector this is the
/// cumulative arrival probability, and its derivative is 𝒟(t).
pub fn classical_cdf(t: f64, h: f64, cloud: &ThermalCloud, g: f64) -> f64 {
    normal_cdf((h + 0.5 * g * t * t) / cloud.variance(t).sqrt())
}

/// 𝒟 sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalCurve {
    pub grid: TimeGrid,
    pub density: Vec<f64>,
    /// Set when 𝒟 went negative somewhere; the formula is only meaningful
    /// for a detector below the cloud.
    pub has_negative: bool,
}

impl ClassicalCurve {
    pub fn integral(&self) -> f64 {
        quad::trapezoid(&self.density, self.grid.step())
    }
}

/// Samples 𝒟 on `grid`, using the limit `𝒟(0) = 0`.
pub fn classical_curve(grid: TimeGrid, h: f64, cloud: &ThermalCloud, g: f64) -> ClassicalCurve {
    let density: Vec<f64> = grid
        .times()
        .into_iter()
        .map(|t| classical_distribution(t, h, cloud, g).unwrap_or(0.0))
        .collect();
    let has_negative = density.iter().any(|&v| v < 0.0);
    ClassicalCurve {
        grid,
        density,
        has_negative,
    }
}

/// Window that holds the classical pulse.
///
/// With the detector below and `g > 0`: `t* ± 10 σ_t`, where
/// `σ_t = √(σ₀² + σ_v²t*²)/(g t*)`. Otherwise a free-flight window out to
/// a hundred crossing times `|H|/σ_v`.
pub fn classical_window(h: f64, cloud: &ThermalCloud, g: f64) -> (f64, f64) {
    if g > 0.0 && h < 0.0 {
        let t_star = (2.0 * -h / g).sqrt();
        let sigma_t = cloud.variance(t_star).sqrt() / (g * t_star);
        ((t_star - 10.0 * sigma_t).max(0.0), t_star + 10.0 * sigma_t)
    } else if cloud.sigma_v() > 0.0 {
        (0.0, 100.0 * (h.abs().max(cloud.sigma0)) / cloud.sigma_v())
    } else {
        (0.0, 1.0)
    }
}

pub fn classical_auto_grid(h: f64, cloud: &ThermalCloud, g: f64) -> TimeGrid {
    let (lo, hi) = classical_window(h, cloud, g);
    TimeGrid::new(lo, hi, 4001).expect("classical window is ordered")
}

/// Location of the maximum of 𝒟 by golden-section search inside the
/// automatic window, seeded from a coarse scan.
pub fn classical_peak(h: f64, cloud: &ThermalCloud, g: f64) -> f64 {
    let grid = classical_auto_grid(h, cloud, g);
    let curve = classical_curve(grid, h, cloud, g);
    let i = curve
        .density
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > curve.density[best] { i } else { best });
    let step = grid.step();
    let f = |t: f64| classical_distribution(t, h, cloud, g).unwrap_or(f64::NEG_INFINITY);
    let (mut a, mut b) = ((grid.time(i) - step).max(f64::MIN_POSITIVE), grid.time(i) + step);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
        if b - a <= 1e-15 * b {
            break;
        }
    }
    0.5 * (a + b)
}

/// Downward crossing time of `z = h` for one trajectory
/// `z(t) = z0 + v0 t − ½gt²`, if it happens at `t > 0`.
pub fn arrival_time(z0: f64, v0: f64, h: f64, g: f64) -> Option<f64> {
    let drop = z0 - h;
    if g == 0.0 {
        return (drop > 0.0 && v0 < 0.0).then(|| drop / -v0);
    }
    let disc = v0 * v0 + 2.0 * g * drop;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    // the larger root is the downward crossing
    let t = if v0 < 0.0 && drop > 0.0 {
        2.0 * drop / (root - v0)
    } else {
        (v0 + root) / g
    };
    (t > 0.0).then_some(t)
}

/// Sorted arrival times of a sampled ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRun {
    pub arrivals: Vec<f64>,
    pub no_arrival: u64,
    pub n_samples: u64,
    pub seed: u64,
}

impl MonteCarloRun {
    pub fn arrival_fraction(&self) -> f64 {
        self.arrivals.len() as f64 / self.n_samples as f64
    }

    /// Kolmogorov–Smirnov distance to `cdf`. Non-arriving samples count as
    /// arriving at `+∞`.
    pub fn ks_statistic(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.n_samples as f64;
        self.arrivals
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let f = cdf(t);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Arrival density histogram, normalized by the total sample count.
    pub fn histogram(&self, t_start: f64, t_end: f64, bins: usize) -> Histogram {
        let width = (t_end - t_start) / bins as f64;
        let mut counts = vec![0u64; bins];
        for &t in &self.arrivals {
            if t >= t_start && t < t_end {
                let k = (((t - t_start) / width) as usize).min(bins - 1);
                counts[k] += 1;
            }
        }
        let norm = self.n_samples as f64 * width;
        Histogram {
            t_start,
            bin_width: width,
            density: counts.iter().map(|&c| c as f64 / norm).collect(),
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub t_start: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    /// Counts per sample per second.
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|k| self.t_start + (k as f64 + 0.5) * self.bin_width)
            .collect()
    }
}

/// Samples `n` trajectories from the thermal ensemble and records their
/// first downward crossing of `h`.
///
/// Chunk `k` draws from a ChaCha8 stream keyed by `(seed, k)`, so the
/// result depends only on `seed` and `n`, not on the thread count.
pub fn monte_carlo_tof(
    cloud: &ThermalCloud,
    h: f64,
    g: f64,
    n: u64,
    seed: u64,
) -> Result<MonteCarloRun, ClassicalError> {
    if n == 0 {
        return Err(ClassicalError::NoSamples);
    }
    let chunks = n.div_ceil(MC_CHUNK as u64);
    let (s0, sv) = (cloud.sigma0, cloud.sigma_v());
    let per_chunk: Vec<(Vec<f64>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let len = (n - k * MC_CHUNK as u64).min(MC_CHUNK as u64) as usize;
            let mut out = Vec::with_capacity(len);
            let mut missed = 0;
            for _ in 0..len {
                let z: f64 = StandardNormal.sample(&mut rng);
                let v: f64 = StandardNormal.sample(&mut rng);
                match arrival_time(s0 * z, sv * v, h, g) {
                    Some(t) => out.push(t),
                    None => missed += 1,
                }
            }
            (out, missed)
        })
        .collect();
    let mut arrivals = Vec::with_capacity(n as usize);
    let mut no_arrival = 0;
    for (chunk, missed) in per_chunk {
        arrivals.extend(chunk);
        no_arrival += missed;
    }
    arrivals.par_sort_unstable_by(f64::total_cmp);
    Ok(MonteCarloRun {
        arrivals,
        no_arrival,
        n_samples: n,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sodium;
    use proptest::prelude::*;

    fn sodium_cloud(t_kelvin: f64) -> ThermalCloud {
        ThermalCloud::new(sodium(), 1e-6, t_kelvin).unwrap()
    }

    #[test]
    fn sigma_v_examples() {
        assert_eq!(sigma_v(&sodium_cloud(0.0)), 0.0);
        let v = sigma_v(&sodium_cloud(1e-6));
        assert!((v - 1.902e-2).abs() < 1e-4, "{v}");
        assert!((v - 0.0190173).abs() < 1e-6);
        let v4 = sigma_v(&sodium_cloud(4e-6));
        assert!((v4 - 2.0 * v).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_clouds() {
        assert_eq!(
            ThermalCloud::new(sodium(), 1e-6, -1.0),
            Err(ConfigError::NegativeTemperature(-1.0))
        );
        assert!(ThermalCloud::new(sodium(), 0.0, 1e-6).is_err());
    }

    #[test]
    fn non_positive_time_is_an_error() {
        let c = sodium_cloud(1e-6);
        assert_eq!(
            classical_distribution(0.0, -0.01, &c, 9.8),
            Err(ClassicalError::NonPositiveTime(0.0))
        );
        assert!(classical_distribution(-1.0, -0.01, &c, 9.8).is_err());
    }

    #[test]
    fn peak_near_free_fall_time() {
        let c = sodium_cloud(1e-6);
        let t_peak = classical_peak(-0.01, &c, 9.8);
        let t_free = (2.0 * 0.01 / 9.8f64).sqrt();
        assert!(((t_peak - t_free) / t_free).abs() < 5e-3);
        assert!((t_peak - 0.045092).abs() < 2e-6, "{t_peak}");
    }

    #[test]
    fn peak_narrows_toward_free_fall() {
        let t_free = (2.0 * 0.01 / 9.8f64).sqrt();
        let mut prev_width = f64::INFINITY;
        let mut prev_err = f64::INFINITY;
        for k in 0..5 {
            let scale = 0.5f64.powi(k);
            let c = ThermalCloud::new(sodium(), 1e-6 * scale, 1e-6 * scale * scale).unwrap();
            let peak = classical_peak(-0.01, &c, 9.8);
            let (lo, hi) = classical_window(-0.01, &c, 9.8);
            assert!(hi - lo < prev_width);
            assert!((peak - t_free).abs() < prev_err);
            prev_width = hi - lo;
            prev_err = (peak - t_free).abs();
        }
    }

    #[test]
    fn integrates_to_one() {
        let c = sodium_cloud(1e-6);
        let (lo, hi) = classical_window(-0.01, &c, 9.8);
        let f = |t: f64| classical_distribution(t, -0.01, &c, 9.8).unwrap_or(0.0);
        let total = quad::simpson(f, lo, hi, 20_000);
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn density_is_derivative_of_cdf() {
        let c = sodium_cloud(1e-6);
        for k in 1..40 {
            let t = 0.03 + k as f64 * 8e-4;
            let h = 1e-6;
            let num = (classical_cdf(t + h, -0.01, &c, 9.8) - classical_cdf(t - h, -0.01, &c, 9.8))
                / (2.0 * h);
            let d = classical_distribution(t, -0.01, &c, 9.8).unwrap();
            assert!((num - d).abs() < 1e-6 * d.abs().max(1.0), "{t}: {num} {d}");
        }
    }

    #[test]
    fn normal_cdf_reference_values() {
        // 30-digit reference values
        let table = [
            (-8.0, 6.2209605742717841e-16),
            (-5.0, 2.8665157187919391e-7),
            (-3.6, 0.00015910859015753383),
            (-2.0, 0.022750131948179207),
            (-1.0, 0.15865525393145705),
            (-0.3, 0.38208857781104737),
            (0.0, 0.5),
            (0.5, 0.6914624612740131),
            (1.7, 0.95543453724145696),
            (3.0, 0.99865010196836991),
            (6.0, 0.99999999901341235),
        ];
        for (x, want) in table {
            let got = normal_cdf(x);
            assert!((got - want).abs() <= 1e-14 * want, "{x}: {got:e} vs {want:e}");
        }
    }

    #[test]
    fn zero_temperature_is_finite() {
        let c = sodium_cloud(0.0);
        let grid = classical_auto_grid(-0.01, &c, 9.8);
        let curve = classical_curve(grid, -0.01, &c, 9.8);
        assert!(curve.density.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!((curve.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn arrival_time_branches() {
        let g: f64 = 9.8;
        let t_free = (2.0 * 0.01 / g).sqrt();
        assert!((arrival_time(0.0, 0.0, -0.01, g).unwrap() - t_free).abs() < 1e-15);
        // thrown upward: comes back down through the plane later
        let up = arrival_time(0.0, 1.0, -0.01, g).unwrap();
        assert!((up - (1.0 + (1.0 + 2.0 * g * 0.01f64).sqrt()) / g).abs() < 1e-15);
        // starting below and moving down never crosses downward
        assert_eq!(arrival_time(-0.02, -1.0, -0.01, g), None);
        // starting below, thrown high enough: crosses on the way down
        assert!(arrival_time(-0.02, 2.0, -0.01, g).is_some());
        assert_eq!(arrival_time(0.0, 1.0, -0.01, 0.0), None);
        assert_eq!(arrival_time(0.0, -2.0, -0.01, 0.0), Some(0.005));
    }

    #[test]
    fn every_sample_arrives_under_gravity() {
        let run = monte_carlo_tof(&sodium_cloud(1e-6), -0.01, 9.8, 100_000, 3).unwrap();
        assert_eq!(run.no_arrival, 0);
        assert_eq!(run.arrival_fraction(), 1.0);
    }

    #[test]
    fn free_flight_counts_missing_samples() {
        let run = monte_carlo_tof(&sodium_cloud(1e-6), -0.01, 0.0, 100_000, 3).unwrap();
        let frac = run.no_arrival as f64 / 100_000.0;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let c = sodium_cloud(1e-6);
        let a = monte_carlo_tof(&c, -0.01, 9.8, 200_001, 7).unwrap();
        let b = monte_carlo_tof(&c, -0.01, 9.8, 200_001, 7).unwrap();
        assert_eq!(a, b);
        let ha = a.histogram(0.03, 0.06, 300);
        let hb = b.histogram(0.03, 0.06, 300);
        assert_eq!(ha, hb);
        let other = monte_carlo_tof(&c, -0.01, 9.8, 200_001, 8).unwrap();
        assert_ne!(a.arrivals, other.arrivals);
        assert_eq!(monte_carlo_tof(&c, -0.01, 9.8, 0, 7), Err(ClassicalError::NoSamples));
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let c = sodium_cloud(1e-6);
        let run = monte_carlo_tof(&c, -0.01, 9.8, 1_000_000, 1).unwrap();
        let ks = run.ks_statistic(|t| classical_cdf(t, -0.01, &c, 9.8));
        assert!(ks < 3e-3, "{ks}");
        let hist = run.histogram(0.035, 0.055, 100);
        let total: f64 = hist.density.iter().sum::<f64>() * hist.bin_width;
        assert!((total - 1.0).abs() < 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn non_negative_below_detector(
            t in 1e-4f64..0.2,
            temp in 0.0f64..1e-4,
            sigma0 in 1e-7f64..1e-4,
            h in -0.1f64..-1e-4,
            g in 0.0f64..20.0,
        ) {
            let c = ThermalCloud::new(sodium(), sigma0, temp).unwrap();
            let d = classical_distribution(t, h, &c, g).unwrap();
            prop_assert!(d >= 0.0 && d.is_finite());
        }

        #[test]
        fn arrival_solves_trajectory(
            z0 in -1e-4f64..1e-4,
            v0 in -0.1f64..0.1,
            h in -0.1f64..-1e-3,
        ) {
            let g = 9.8;
            let t = arrival_time(z0, v0, h, g).unwrap();
            let z = z0 + v0 * t - 0.5 * g * t * t;
            prop_assert!((z - h).abs() < 1e-12);
            prop_assert!(v0 - g * t < 0.0);
        }
    }
}
