//! Closed-form evolution of the two-packet state under `V = m g z`.
//!
//! Each component is a freely spreading Gaussian translated by the
//! ballistic drop `−½gt²` and multiplied by the gravitational phase
//! `exp[−i(m/ħ)(g t z + g² t³/6)]`:
//!
//! ```text
//! ψ(z,t) = (2π s_t²)^(−1/4) exp[−(z + offset + ½gt²)² / (4 s_t σ₀)] exp[−i(m/ħ)(gtz + g²t³/6)]
//! s_t    = σ₀ (1 + iħt / 2mσ₀²)
//! ```

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::ResidualError;
use crate::model::ValidatedConfig;
use crate::quad;

/// Complex Gaussian width `s_t` (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexWidth(Complex64);

impl ComplexWidth {
    pub fn value(self) -> Complex64 {
        self.0
    }

    /// `s_t s_t* = σ²`, the squared position spread.
    pub fn spread_sq(self) -> f64 {
        self.0.norm_sqr()
    }
}

pub fn complex_width(t: f64, cfg: &ValidatedConfig) -> ComplexWidth {
    let s0 = cfg.sigma0();
    ComplexWidth(Complex64::new(s0, cfg.hbar() * t / (2.0 * cfg.mass() * s0)))
}

/// `σ²(t) = σ₀² (1 + ħ²t² / 4m²σ₀⁴)`.
pub fn spread_sq(t: f64, cfg: &ValidatedConfig) -> f64 {
    let s0 = cfg.sigma0();
    let a = cfg.hbar() * t / (2.0 * cfg.mass() * s0 * s0);
    s0 * s0 * (1.0 + a * a)
}

/// Centre of the component that starts at `z = −offset`.
pub fn packet_center(t: f64, offset: f64, cfg: &ValidatedConfig) -> f64 {
    -offset - 0.5 * cfg.g() * t * t
}

/// Gravitational phase `−(m/ħ)(g t z + g² t³/6)`, common to both packets.
pub fn gravity_phase(z: f64, t: f64, cfg: &ValidatedConfig) -> f64 {
    let g = cfg.g();
    -(cfg.mass() / cfg.hbar()) * (g * t * z + g * g * t * t * t / 6.0)
}

/// Principal branch of `(2π s_t²)^(−1/4)`.
fn prefactor(s: Complex64) -> Complex64 {
    (-0.25 * (2.0 * PI * s * s).ln()).exp()
}

/// Gaussian factor `exp[−u² / (4 s_t σ₀)]` and `∂z` of its exponent.
fn envelope(u: f64, s: Complex64, sigma0: f64) -> (Complex64, Complex64) {
    let denom = 4.0 * s * sigma0;
    ((-(u * u) / denom).exp(), -2.0 * u / denom)
}

/// Single component amplitude; `offset = 0` gives ψ₁, `offset = d` gives ψ₂.
pub fn packet_amplitude(z: f64, t: f64, offset: f64, cfg: &ValidatedConfig) -> Complex64 {
    let s = complex_width(t, cfg).value();
    let u = z + offset + 0.5 * cfg.g() * t * t;
    let (env, _) = envelope(u, s, cfg.sigma0());
    prefactor(s) * env * Complex64::from_polar(1.0, gravity_phase(z, t, cfg))
}

/// `|ψ|²` from the real Gaussian `(2πσ²)^(−1/2) exp[−u²/2σ²]`.
pub fn packet_density(z: f64, t: f64, offset: f64, cfg: &ValidatedConfig) -> f64 {
    let sig2 = spread_sq(t, cfg);
    let u = z + offset + 0.5 * cfg.g() * t * t;
    (-u * u / (2.0 * sig2)).exp() / (2.0 * PI * sig2).sqrt()
}

/// `Ψ(z,t) = 𝒩 (c1 ψ₁ + c2 ψ₂)`.
pub fn cat_amplitude(z: f64, t: f64, cfg: &ValidatedConfig) -> Complex64 {
    let psi1 = packet_amplitude(z, t, 0.0, cfg);
    let psi2 = packet_amplitude(z, t, cfg.d(), cfg);
    cfg.normalization() * (cfg.c1() * psi1 + cfg.c2() * psi2)
}

/// Analytic `∂Ψ/∂z`.
pub fn cat_gradient(z: f64, t: f64, cfg: &ValidatedConfig) -> Complex64 {
    let s = complex_width(t, cfg).value();
    let pre = prefactor(s);
    let phase = Complex64::from_polar(1.0, gravity_phase(z, t, cfg));
    let kick = Complex64::new(0.0, -cfg.mass() * cfg.g() * t / cfg.hbar());
    let drop = 0.5 * cfg.g() * t * t;
    let component = |offset: f64| {
        let (env, dlog) = envelope(z + offset + drop, s, cfg.sigma0());
        pre * env * phase * (dlog + kick)
    };
    cfg.normalization() * (cfg.c1() * component(0.0) + cfg.c2() * component(cfg.d()))
}

/// `|Ψ(z,t)|²`.
pub fn density(z: f64, t: f64, cfg: &ValidatedConfig) -> f64 {
    cat_amplitude(z, t, cfg).norm_sqr()
}

/// A point sample of the evolved state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSample {
    pub z: f64,
    pub t: f64,
    pub psi: Complex64,
}

pub fn sample(z: f64, t: f64, cfg: &ValidatedConfig) -> WaveSample {
    WaveSample {
        z,
        t,
        psi: cat_amplitude(z, t, cfg),
    }
}

/// Window `[lo, hi]` holding both packets out to `±width_multiple·σ(t)`.
pub fn support_window(t: f64, width_multiple: f64, cfg: &ValidatedConfig) -> (f64, f64) {
    let sigma = spread_sq(t, cfg).sqrt();
    let top = packet_center(t, 0.0, cfg);
    let bottom = packet_center(t, cfg.d(), cfg);
    (bottom - width_multiple * sigma, top + width_multiple * sigma)
}

/// `∫|Ψ(z,t)|² dz` by composite Simpson over `±12σ` around both packets.
pub fn norm(t: f64, cfg: &ValidatedConfig) -> f64 {
    let (lo, hi) = support_window(t, 12.0, cfg);
    let sigma = spread_sq(t, cfg).sqrt();
    // Cross-term fringes in z have wavenumber ħ t d / (4 m σ₀² σ²).
    let k_fringe =
        cfg.hbar() * t * cfg.d() / (4.0 * cfg.mass() * cfg.sigma0().powi(2) * sigma * sigma);
    let per_sigma = 64.0 * (hi - lo) / sigma;
    let per_fringe = 64.0 * (hi - lo) * k_fringe / (2.0 * PI);
    let n = per_sigma.max(per_fringe).max(2000.0).ceil() as usize;
    quad::simpson(|z| density(z, t, cfg), lo, hi, n)
}

/// Relative residual of the Schrödinger equation `iħ∂tΨ = −ħ²/2m ∂zzΨ + mgzΨ`
/// evaluated with second-order central differences on the closed form.
///
/// Returns `‖iħ∂tΨ − ĤΨ‖₂ / ‖ĤΨ‖₂` over the interior grid points.
pub fn pde_residual(
    z_grid: &[f64],
    t: f64,
    dt: f64,
    cfg: &ValidatedConfig,
) -> Result<f64, ResidualError> {
    if z_grid.len() < 3 {
        return Err(ResidualError::TooFewPoints);
    }
    if !(dt > 0.0) {
        return Err(ResidualError::NonPositiveStep(dt));
    }
    let dz = (z_grid[z_grid.len() - 1] - z_grid[0]) / (z_grid.len() - 1) as f64;
    let uniform = z_grid
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dz).abs() <= 1e-6 * dz.abs());
    if !(dz > 0.0) || !uniform {
        return Err(ResidualError::NonUniformGrid);
    }
    let (m, hbar, g) = (cfg.mass(), cfg.hbar(), cfg.g());
    // At least 16 points per local de Broglie wavelength 2πħ/(mgt) and per σ(t).
    let mut limit = spread_sq(t, cfg).sqrt() / 16.0;
    if g > 0.0 && t > 0.0 {
        limit = limit.min(2.0 * PI * hbar / (m * g * t) / 16.0);
    }
    if dz > limit {
        return Err(ResidualError::GridTooCoarse { dz, limit });
    }

    let psi: Vec<Complex64> = z_grid.iter().map(|&z| cat_amplitude(z, t, cfg)).collect();
    let i_hbar = Complex64::new(0.0, hbar);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 1..z_grid.len() - 1 {
        let z = z_grid[i];
        let dpsi_dt =
            (cat_amplitude(z, t + dt, cfg) - cat_amplitude(z, t - dt, cfg)) / (2.0 * dt);
        let lap = (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]) / (dz * dz);
        let h_psi = -hbar * hbar / (2.0 * m) * lap + m * g * z * psi[i];
        num += (i_hbar * dpsi_dt - h_psi).norm_sqr();
        den += h_psi.norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// Uniform grid of `n` points covering `[lo, hi]`.
pub fn uniform_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * h).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sodium, CatConfig, Gravity};
    use proptest::prelude::*;

    fn cfg(sigma0: f64, d: f64, g: f64) -> ValidatedConfig {
        CatConfig::new(sodium(), sigma0, d, -0.01)
            .with_gravity(Gravity::new(g).unwrap())
            .validate()
            .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn width_at_zero_is_real() {
        let c = cfg(1e-6, 50e-6, 9.8);
        let s = complex_width(0.0, &c).value();
        assert_eq!(s, Complex64::new(1e-6, 0.0));
    }

    #[test]
    fn width_imaginary_part_frozen() {
        // ħ t / (2 m σ₀) with sodium, σ₀ = 1 μm, t = 45 ms
        let c = cfg(1e-6, 50e-6, 9.8);
        let s = complex_width(0.045, &c).value();
        let expected = 1.054571817e-34 * 0.045 / (2.0 * crate::constants::SODIUM_23_MASS * 1e-6);
        assert!(rel(s.im, expected) < 1e-15);
        assert!((s.im - 6.2158e-5).abs() < 1e-8, "{}", s.im);
        assert_eq!(s.re, 1e-6);
    }

    #[test]
    fn peak_values_at_zero_time() {
        let c = cfg(1e-6, 50e-6, 9.8);
        let peak = (2.0 * PI * 1e-12_f64).powf(-0.25);
        let a = packet_amplitude(0.0, 0.0, 0.0, &c);
        let b = packet_amplitude(-50e-6, 0.0, 50e-6, &c);
        assert!((a - peak).norm() / peak < 1e-14);
        assert!((b - peak).norm() / peak < 1e-14);
    }

    #[test]
    fn ballistic_packet_density_matches_spread() {
        let c = cfg(1e-6, 0.0, 9.8);
        let t = 0.02;
        let z = -0.5 * 9.8 * t * t;
        let dens = packet_amplitude(z, t, 0.0, &c).norm_sqr();
        let expected = 1.0 / (2.0 * PI * spread_sq(t, &c)).sqrt();
        assert!(rel(dens, expected) < 1e-12);
    }

    #[test]
    fn zero_separation_cat_is_single_packet() {
        let c = cfg(1e-6, 0.0, 9.8);
        for &(z, t) in &[(0.0, 0.0), (-1e-3, 0.01), (-0.01, 0.045), (3e-5, 0.001)] {
            let a = cat_amplitude(z, t, &c).norm_sqr();
            let b = packet_amplitude(z, t, 0.0, &c).norm_sqr();
            assert!(rel(a, b) < 1e-12 || (a < 1e-300 && b < 1e-300));
        }
    }

    #[test]
    fn norm_is_one() {
        let c = cfg(1e-6, 50e-6, 9.8);
        assert!((norm(0.0, &c) - 1.0).abs() < 1e-9);
        assert!((norm(0.03, &c) - 1.0).abs() < 1e-8);
        let c = cfg(1e-6, 2e-6, 9.8);
        assert!((norm(0.03, &c) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn packet_center_follows_free_fall() {
        let c = cfg(1e-6, 0.0, 9.8);
        let t = 0.02;
        let (lo, hi) = support_window(t, 6.0, &c);
        let zs = uniform_points(lo, hi, 40001);
        let (imax, _) = zs
            .iter()
            .map(|&z| packet_amplitude(z, t, 0.0, &c).norm_sqr())
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let dz = zs[1] - zs[0];
        assert!((zs[imax] + 0.5 * 9.8 * t * t).abs() <= dz);
    }

    #[test]
    fn prefactor_phase_is_continuous() {
        let c = cfg(1e-6, 0.0, 9.8);
        let mut prev = prefactor(complex_width(0.0, &c).value()).arg();
        for i in 1..=20000 {
            let t = i as f64 * 1e-5;
            let arg = prefactor(complex_width(t, &c).value()).arg();
            assert!((arg - prev).abs() < 1e-2, "jump at t={t}");
            prev = arg;
        }
        // approaches −π/4 as s_t becomes imaginary
        assert!(prev < 0.0 && prev > -PI / 4.0);
    }

    #[test]
    fn analytic_gradient_matches_complex_difference() {
        let c = cfg(1e-6, 20e-6, 9.8);
        let t = 0.03;
        let h = 1e-11;
        for k in 0..20 {
            let z = packet_center(t, 10e-6, &c) + (k as f64 - 10.0) * 3e-6;
            let fd = (cat_amplitude(z + h, t, &c) - cat_amplitude(z - h, t, &c)) / (2.0 * h);
            let an = cat_gradient(z, t, &c);
            assert!((fd - an).norm() / an.norm() < 1e-5);
        }
    }

    #[test]
    fn pde_residual_second_order() {
        let c = cfg(1e-6, 20e-6, 9.8);
        let t = 0.01;
        let (lo, hi) = support_window(t, 12.0, &c);
        let mut prev = None;
        for level in 0..3 {
            let dz = 5e-9 / f64::from(1 << level);
            let dt = 1e-8 / f64::from(1 << level);
            let n = ((hi - lo) / dz) as usize + 1;
            let zs = uniform_points(lo, lo + (n - 1) as f64 * dz, n);
            let r = pde_residual(&zs, t, dt, &c).unwrap();
            if let Some(p) = prev {
                let ratio: f64 = p / r;
                assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
            }
            prev = Some(r);
        }
    }

    #[test]
    fn pde_residual_free_single_packet() {
        let c = cfg(1e-6, 0.0, 0.0);
        let t = 0.01;
        let (lo, hi) = support_window(t, 12.0, &c);
        let zs = uniform_points(lo, hi, ((hi - lo) / 5e-9) as usize);
        let r = pde_residual(&zs, t, 1e-8, &c).unwrap();
        assert!(r < 1e-4, "{r}");
    }

    #[test]
    fn pde_residual_rejects_coarse_grid() {
        let c = cfg(1e-6, 20e-6, 9.8);
        let zs = uniform_points(-1e-3, 0.0, 101);
        assert!(matches!(
            pde_residual(&zs, 0.01, 1e-8, &c),
            Err(ResidualError::GridTooCoarse { .. })
        ));
        assert!(matches!(
            pde_residual(&[0.0, 1e-9, 3e-9], 0.01, 1e-8, &c),
            Err(ResidualError::NonUniformGrid)
        ));
    }

    proptest! {
        #[test]
        fn modulus_identity(
            z in -0.02f64..1e-4,
            t in 0.0f64..0.08,
            sigma0 in 0.5e-6f64..6e-6,
            d in 0.0f64..100e-6,
        ) {
            let c = cfg(sigma0, d, 9.8);
            for offset in [0.0, d] {
                let direct = packet_amplitude(z, t, offset, &c).norm_sqr();
                let real = packet_density(z, t, offset, &c);
                if real > 1e-250 {
                    prop_assert!(rel(direct, real) < 1e-12, "{direct} vs {real}");
                }
            }
        }

        #[test]
        fn spread_identity(t in 0.0f64..1.0, sigma0 in 0.1e-6f64..10e-6) {
            let c = cfg(sigma0, 0.0, 9.8);
            let s = complex_width(t, &c);
            prop_assert!(rel(s.spread_sq(), spread_sq(t, &c)) < 1e-12);
            prop_assert_eq!(s.value().re, sigma0);
            prop_assert!(s.value().im >= 0.0);
        }

        #[test]
        fn samples_are_finite(z in -1.0f64..1.0, t in 0.0f64..10.0) {
            let c = cfg(1e-6, 50e-6, 9.8);
            let s = sample(z, t, &c);
            prop_assert!(s.psi.re.is_finite() && s.psi.im.is_finite());
        }
    }
}
