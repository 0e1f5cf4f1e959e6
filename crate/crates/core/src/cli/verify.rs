//! The `verify` battery: closed form against itself, against the grid
//! propagator, and the classical formula against trajectory sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{self, Write};

use crate::analytic;
use crate::classical::{self, ThermalCloud};
use crate::current::{self, auto_grid, quantum_tof};
use crate::geometry::{self, Scenario};
use crate::model::{sodium, CatConfig, Gravity, ValidatedConfig};
use crate::oracle::{self, ReducedScale};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    pub quick: bool,
    /// Test-only: multiplies ħ in the closed-form side of the checks.
    #[cfg(test)]
    pub hbar_scale: Option<f64>,
}

impl VerifyOptions {
    pub fn new(quick: bool) -> Self {
        Self {
            quick,
            ..Self::default()
        }
    }

    /// Tolerance, relaxed tenfold in quick mode.
    fn tol(&self, limit: f64) -> f64 {
        if self.quick {
            10.0 * limit
        } else {
            limit
        }
    }

    fn closed_form(&self, cfg: ValidatedConfig) -> ValidatedConfig {
        #[cfg(test)]
        if let Some(scale) = self.hbar_scale {
            let hbar = cfg.hbar() * scale;
            return cfg.map(|c| c.with_hbar(hbar)).expect("tampered config stays valid");
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &'static str, measured: f64, limit: f64) -> Self {
        Self {
            name,
            measured,
            limit,
            passed: measured < limit,
        }
    }

    fn within(name: &'static str, measured: f64, lo: f64, hi: f64) -> Self {
        Self {
            name,
            measured,
            limit: hi,
            passed: (lo..=hi).contains(&measured),
        }
    }

    fn failed(name: &'static str, err: impl std::fmt::Display) -> Self {
        eprintln!("{name}: {err}");
        Self {
            name,
            measured: f64::NAN,
            limit: f64::NAN,
            passed: false,
        }
    }
}

fn standard_cat(d: f64) -> ValidatedConfig {
    CatConfig::new(sodium(), 1e-6, d, -0.01)
        .validate()
        .expect("standard parameters are valid")
}

fn decomposition(opts: &VerifyOptions) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let cfg = CatConfig::new(
            sodium().scaled(rng.random_range(0.5..4.0)).expect("positive mass"),
            rng.random_range(0.5e-6..3e-6),
            rng.random_range(0.0..80e-6),
            -rng.random_range(0.002..0.05),
        )
        .validate()
        .expect("random config is valid");
        let cfg = opts.closed_form(cfg);
        let grid = auto_grid(&cfg);
        let scale = quantum_tof(grid, &cfg, false).peak().1;
        for _ in 0..20 {
            let t = rng.random_range(grid.t_start()..grid.t_end());
            let z = cfg.detector() + rng.random_range(-100e-6..100e-6);
            let a = current::current_breakdown(z, t, &cfg).total;
            let b = current::direct_current(z, t, &cfg);
            worst = worst.max((a - b).abs() / scale);
        }
    }
    Check::below("decomposition vs direct current", worst, opts.tol(1e-10))
}

fn delta_forms(opts: &VerifyOptions) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let cfg = CatConfig::new(sodium(), rng.random_range(0.3e-6..10e-6), rng.random_range(0.0..400e-6), -0.01)
            .with_gravity(Gravity::new(rng.random_range(0.0..20.0)).expect("non-negative"))
            .validate()
            .expect("random config is valid");
        let (z, t) = (rng.random_range(-0.05..0.0), rng.random_range(0.0..0.2));
        let a = current::phase_delta(z, t, &cfg);
        let b = current::phase_delta_expanded(z, t, &cfg);
        if a != 0.0 {
            worst = worst.max(((a - b) / a).abs());
        }
    }
    Check::below("phase forms agree", worst, opts.tol(1e-12))
}

fn normalization(opts: &VerifyOptions) -> Check {
    let cfg = opts.closed_form(standard_cat(50e-6));
    let worst = [0.0, 0.01, 0.045]
        .iter()
        .map(|&t| (analytic::norm(t, &cfg) - 1.0).abs())
        .fold(0.0, f64::max);
    Check::below("norm at 0, 10, 45 ms", worst, opts.tol(1e-8))
}

fn pde_residual(opts: &VerifyOptions) -> Check {
    let cfg = opts.closed_form(standard_cat(20e-6));
    let t = 0.01;
    let center = analytic::packet_center(t, 10e-6, &cfg);
    let level = |dz: f64| {
        let zs = analytic::uniform_points(center - 100e-6, center + 100e-6, (200e-6 / dz) as usize + 1);
        analytic::pde_residual(&zs, t, 2.0 * dz, &cfg)
    };
    match (level(2.5e-9), level(1.25e-9)) {
        (Ok(a), Ok(b)) => Check::within("closed-form PDE residual order", a / b, 3.5, 4.5),
        (Err(e), _) | (_, Err(e)) => Check::failed("closed-form PDE residual order", e),
    }
}

fn oracle_checks(opts: &VerifyOptions) -> Vec<Check> {
    let rs = ReducedScale::standard(opts.quick);
    let snaps = vec![rs.n_steps / 2, rs.n_steps];
    let run = match rs.run(snaps) {
        Ok(run) => run,
        Err(e) => return vec![Check::failed("grid propagation", e)],
    };
    let cmp = oracle::compare_with_closed_form(&run, &opts.closed_form(rs.cfg.clone()));
    let mut checks = vec![
        Check::below("grid vs closed-form amplitude", cmp.psi_error, opts.tol(1e-5)),
        Check::below("grid vs closed-form current at detector", cmp.current_error, opts.tol(1e-5)),
        Check::below("grid norm drift", run.max_norm_drift, opts.tol(1e-10)),
    ];
    match oracle::continuity_study(&rs.cfg) {
        Ok([a, b, c]) => {
            checks.push(Check::within("continuity order (coarse)", a.relative / b.relative, 3.5, 4.5));
            checks.push(Check::within("continuity order (fine)", b.relative / c.relative, 3.5, 4.5));
            checks.push(Check::below("continuity residual", c.relative, opts.tol(1e-4)));
        }
        Err(e) => checks.push(Check::failed("continuity study", e)),
    }
    checks
}

fn classical_checks(opts: &VerifyOptions) -> Vec<Check> {
    let cloud = ThermalCloud::new(sodium(), 1e-6, 1e-6).expect("valid cloud");
    let (h, g) = (-0.01, 9.8);
    let (lo, hi) = classical::classical_window(h, &cloud, g);
    let f = |t: f64| classical::classical_distribution(t, h, &cloud, g).unwrap_or(0.0);
    let total = crate::quad::simpson(f, lo, hi, 20_000);
    let n = if opts.quick { 1_000_000 } else { 10_000_000 };
    let ks = classical::monte_carlo_tof(&cloud, h, g, n, 7)
        .map(|run| run.ks_statistic(|t| classical::classical_cdf(t, h, &cloud, g)));
    let mut checks = vec![Check::below("classical normalization", (total - 1.0).abs(), opts.tol(1e-6))];
    checks.push(match ks {
        Ok(ks) => Check::below("classical Monte Carlo KS distance", ks, opts.tol(1e-3)),
        Err(e) => Check::failed("classical Monte Carlo KS distance", e),
    });
    checks
}

fn geometry_check(opts: &VerifyOptions) -> Check {
    let cfg = standard_cat(50e-6);
    let reduced = match Scenario::PI3.reduced_config(&cfg, 0.0) {
        Ok(r) => opts.closed_form(r),
        Err(e) => return Check::failed("horizontal split surface flux", e),
    };
    let t = 0.0452;
    match geometry::surface_flux(Scenario::PI3, &cfg, 0.0, t) {
        Ok(flux) => {
            let j = current::direct_current(reduced.detector(), t, &reduced);
            Check::below("horizontal split surface flux", ((flux - j) / j).abs(), opts.tol(1e-6))
        }
        Err(e) => Check::failed("horizontal split surface flux", e),
    }
}

/// Runs every check, printing one line each. Returns whether all passed.
pub fn run_checks(opts: &VerifyOptions, out: &mut impl Write) -> io::Result<bool> {
    let mut checks = vec![
        decomposition(opts),
        delta_forms(opts),
        normalization(opts),
        pde_residual(opts),
        geometry_check(opts),
    ];
    checks.extend(oracle_checks(opts));
    checks.extend(classical_checks(opts));
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "[{tag}] {}: {:.3e} (limit {:.1e})", c.name, c.measured, c.limit)?;
    }
    let all = checks.iter().all(|c| c.passed);
    writeln!(out, "{} of {} checks passed", checks.iter().filter(|c| c.passed).count(), checks.len())?;
    Ok(all)
}
