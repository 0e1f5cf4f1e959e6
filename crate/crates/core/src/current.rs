//! Probability current of the evolved cat state and the quantum
//! time-of-flight distribution `Π(t) = |J(H, t)|`.
//!
//! The current is available two ways: [`current_breakdown`] assembles it
//! from the single-packet currents and the interference term
//! `2 P₁₂ (η cos δ − λ sin δ)`, while [`direct_current`] evaluates
//! `J = (ħ/m) Im(Ψ* ∂zΨ)` from the closed-form amplitude. The two must agree.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};

use crate::analytic::{self, packet_center, spread_sq};
use crate::model::{CatConfig, TimeGrid, ValidatedConfig};

/// Upper bound on automatically chosen sample counts.
pub const MAX_AUTO_SAMPLES: usize = 1 << 22;

/// Samples per predicted fringe period in the automatic grid.
pub const SAMPLES_PER_FRINGE: f64 = 40.0;

/// Samples used when no fringes are expected (`d = 0`).
pub const DEFAULT_SAMPLES: usize = 2048;

/// Every term of the current at one `(z, t)`.
///
/// `j1`, `j2` and `cross` are the unweighted channels; `total` carries the
/// amplitude weights and `𝒩²`. With `c1 = c2 = 1/√2` this is
/// `total = 𝒩²/2 (j1 + j2 + cross)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurrentBreakdown {
    pub j1: f64,
    pub j2: f64,
    pub cross: f64,
    pub total: f64,
    pub p12: f64,
    pub delta: f64,
    pub lambda: f64,
    pub eta: f64,
}

/// Relative phase `δ = ħt(d² + dgt² + 2zd) / (8 m σ₀² σ²)`.
pub fn phase_delta(z: f64, t: f64, cfg: &ValidatedConfig) -> f64 {
    let (d, g) = (cfg.d(), cfg.g());
    let s0sq = cfg.sigma0() * cfg.sigma0();
    cfg.hbar() * t * (d * d + d * g * t * t + 2.0 * z * d)
        / (8.0 * cfg.mass() * s0sq * spread_sq(t, cfg))
}

/// The same phase written with `σ₀²σ² = σ₀⁴ + ħ²t²/4m²` expanded.
pub fn phase_delta_expanded(z: f64, t: f64, cfg: &ValidatedConfig) -> f64 {
    let (d, g, m, hbar) = (cfg.d(), cfg.g(), cfg.mass(), cfg.hbar());
    let s0 = cfg.sigma0();
    hbar * t * (d * d + d * g * t * t + 2.0 * z * d)
        / (8.0 * m * (s0.powi(4) + hbar * hbar * t * t / (4.0 * m * m)))
}

/// Temporal overlap envelope `P₁₂ = |ψ₁| |ψ₂|`, from the real Gaussians.
pub fn overlap_p12(z: f64, t: f64, cfg: &ValidatedConfig) -> f64 {
    let sig2 = spread_sq(t, cfg);
    let u1 = z + 0.5 * cfg.g() * t * t;
    let u2 = u1 + cfg.d();
    (-(u1 * u1 + u2 * u2) / (4.0 * sig2)).exp() / (2.0 * PI * sig2).sqrt()
}

/// Spreading-velocity coefficient `ħ²t / (4m²σ₀²σ²)` (1/s).
fn spreading_rate(t: f64, cfg: &ValidatedConfig) -> f64 {
    let (m, hbar) = (cfg.mass(), cfg.hbar());
    hbar * hbar * t / (4.0 * m * m * cfg.sigma0().powi(2) * spread_sq(t, cfg))
}

pub fn current_breakdown(z: f64, t: f64, cfg: &ValidatedConfig) -> CurrentBreakdown {
    let (d, g) = (cfg.d(), cfg.g());
    let rate = spreading_rate(t, cfg);
    let u1 = z + 0.5 * g * t * t;
    let u2 = u1 + d;
    let j1 = (rate * u1 - g * t) * analytic::packet_density(z, t, 0.0, cfg);
    let j2 = (rate * u2 - g * t) * analytic::packet_density(z, t, d, cfg);

    let lambda = cfg.hbar() * d / (4.0 * cfg.mass() * spread_sq(t, cfg));
    let eta = 0.5 * rate * (2.0 * z + d + g * t * t) - g * t;
    let p12 = overlap_p12(z, t, cfg);
    let delta = phase_delta(z, t, cfg);

    // c1* c2 = |κ| e^{iφ}; φ shifts the fringe phase.
    let kappa = cfg.c1().conj() * cfg.c2();
    let shifted = delta + kappa.arg();
    let cross = 2.0 * p12 * (eta * shifted.cos() - lambda * shifted.sin());

    let n2 = cfg.normalization().powi(2);
    let total = n2 * (cfg.c1().norm_sqr() * j1 + cfg.c2().norm_sqr() * j2 + kappa.norm() * cross);
    CurrentBreakdown {
        j1,
        j2,
        cross,
        total,
        p12,
        delta,
        lambda,
        eta,
    }
}

/// `J = (iħ/2m)(Ψ ∂zΨ* − Ψ* ∂zΨ) = (ħ/m) Im(Ψ* ∂zΨ)` from the closed form.
pub fn direct_current(z: f64, t: f64, cfg: &ValidatedConfig) -> f64 {
    let psi = analytic::cat_amplitude(z, t, cfg);
    let grad = analytic::cat_gradient(z, t, cfg);
    cfg.hbar() / cfg.mass() * (psi.conj() * grad).im
}

/// Current of the normalized single packet ψ₁ alone.
pub fn single_packet_current(z: f64, t: f64, cfg: &ValidatedConfig) -> f64 {
    let u = z + 0.5 * cfg.g() * t * t;
    (spreading_rate(t, cfg) * u - cfg.g() * t) * analytic::packet_density(z, t, 0.0, cfg)
}

/// A sampled arrival-time curve at a detector.
#[derive(Debug, Clone, PartialEq)]
pub struct TofSignal {
    pub grid: TimeGrid,
    /// `Π(tᵢ) = |J(H, tᵢ)|` (1/s).
    pub pi: Vec<f64>,
    /// Signed current `J(H, tᵢ)` (1/s).
    pub current: Vec<f64>,
    pub channels: Option<Vec<CurrentBreakdown>>,
    pub detector: f64,
    pub config: CatConfig,
}

impl TofSignal {
    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    /// Builds a signal from a signed current already sampled on `grid`.
    pub fn from_current(
        grid: TimeGrid,
        current: Vec<f64>,
        channels: Option<Vec<CurrentBreakdown>>,
        detector: f64,
        config: CatConfig,
    ) -> Self {
        assert_eq!(current.len(), grid.n_samples());
        Self {
            grid,
            pi: current.iter().map(|j| j.abs()).collect(),
            current,
            channels,
            detector,
            config,
        }
    }

    pub fn peak(&self) -> (f64, f64) {
        let (i, v) = self
            .pi
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        (self.grid.time(i), v)
    }
}

/// Samples `Π(t)` at the configured detector.
pub fn quantum_tof(grid: TimeGrid, cfg: &ValidatedConfig, with_channels: bool) -> TofSignal {
    let h = cfg.detector();
    let (current, channels) = if with_channels {
        let breakdowns: Vec<CurrentBreakdown> = (0..grid.n_samples())
            .into_par_iter()
            .map(|i| current_breakdown(h, grid.time(i), cfg))
            .collect();
        (breakdowns.iter().map(|b| b.total).collect(), Some(breakdowns))
    } else {
        let current = (0..grid.n_samples())
            .into_par_iter()
            .map(|i| current_breakdown(h, grid.time(i), cfg).total)
            .collect();
        (current, None)
    };
    TofSignal::from_current(grid, current, channels, h, cfg.config().clone())
}

/// Predicted arrival of the packet envelope at the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalEstimate {
    /// Earliest and latest predicted peak times (s).
    pub first: f64,
    pub last: f64,
    /// Envelope width in time (s).
    pub width: f64,
    /// Whether gravity carries the packets through the detector.
    pub ballistic: bool,
}

/// Ballistic arrival when the detector is below the packets and `g > 0`;
/// otherwise the free-expansion flux peak `t ≈ L / (√2 v_s)` with
/// `v_s = ħ / 2mσ₀`.
pub fn arrival_estimate(cfg: &ValidatedConfig) -> ArrivalEstimate {
    let (g, h, d) = (cfg.g(), cfg.detector(), cfg.d());
    if g > 0.0 && h < 0.0 {
        let last = (2.0 * -h / g).sqrt();
        let first = (2.0 * (-h - d).max(0.0) / g).sqrt();
        let width = spread_sq(last, cfg).sqrt() / (g * last);
        ArrivalEstimate {
            first,
            last,
            width,
            ballistic: true,
        }
    } else {
        let v_spread = cfg.hbar() / (2.0 * cfg.mass() * cfg.sigma0());
        let distance = h.abs().min((h + d).abs()).max(cfg.sigma0());
        let peak = distance / (SQRT_2 * v_spread);
        ArrivalEstimate {
            first: peak,
            last: peak,
            width: peak,
            ballistic: false,
        }
    }
}

/// Automatic time window and sample count.
///
/// Ballistic case: `[t_first − 8σ_t, t_last + 8σ_t]` clipped at zero, with
/// `σ_t = σ(t*)/(g t*)`. Free expansion: `[0, 10 t_peak]`. Sampling keeps
/// [`SAMPLES_PER_FRINGE`] points per predicted fringe period.
pub fn auto_grid(cfg: &ValidatedConfig) -> TimeGrid {
    let est = arrival_estimate(cfg);
    let (lo, hi) = if est.ballistic {
        ((est.first - 8.0 * est.width).max(0.0), est.last + 8.0 * est.width)
    } else {
        (0.0, 10.0 * est.last)
    };
    let n = match fringe_period(cfg, &est) {
        Some(period) => {
            let wanted = (SAMPLES_PER_FRINGE * (hi - lo) / period).ceil() as usize + 1;
            wanted.clamp(DEFAULT_SAMPLES, MAX_AUTO_SAMPLES)
        }
        None => DEFAULT_SAMPLES,
    };
    TimeGrid::new(lo, hi, n).expect("automatic window is ordered")
}

/// Predicted local fringe period at the arrival peak.
///
/// Under gravity this is `2πħ / (m d g)`; without, it follows from `∂δ/∂t`
/// at the free-expansion peak.
pub fn fringe_period(cfg: &ValidatedConfig, est: &ArrivalEstimate) -> Option<f64> {
    if cfg.d() == 0.0 {
        return None;
    }
    let rate = if est.ballistic {
        cfg.mass() * cfg.d() * cfg.g() / cfg.hbar()
    } else {
        let t = est.last;
        let h = 1e-6 * t;
        let z = cfg.detector();
        ((phase_delta(z, t + h, cfg) - phase_delta(z, t - h, cfg)) / (2.0 * h)).abs()
    };
    (rate > 0.0 && rate.is_finite()).then(|| 2.0 * PI / rate)
}

/// Midpoint of the two evolved packet centres.
pub fn packet_midpoint(t: f64, cfg: &ValidatedConfig) -> f64 {
    0.5 * (packet_center(t, 0.0, cfg) + packet_center(t, cfg.d(), cfg))
}
