//! Acceptance suite. Runs every criterion, prints one `[PASS]`/`[FAIL]`
//! line each and exits non-zero if any failed.
//!
//! `cargo test -p tof-core --test acceptance`

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tof_core::analysis::{fringe_report, sweep, GridPolicy, SweepParam};
use tof_core::classical::{self, ThermalCloud};
use tof_core::current::{self, auto_grid, quantum_tof, TofSignal};
use tof_core::geometry::{self, Scenario};
use tof_core::oracle::{self, ReducedScale};
use tof_core::{analytic, sodium, CatConfig, Gravity, ValidatedConfig};

/// Outcome of one criterion: pass flag and a short measured summary.
type Outcome = (bool, String);

fn standard_cat(d: f64) -> ValidatedConfig {
    CatConfig::new(sodium(), 1e-6, d, -0.01).validate().unwrap()
}

fn max_abs_diff(a: &TofSignal, b: &TofSignal) -> f64 {
    assert_eq!(a.pi.len(), b.pi.len());
    a.pi.iter().zip(&b.pi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn decomposition() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let cfg = CatConfig::new(
            sodium().scaled(rng.random_range(0.5..8.0)).unwrap(),
            rng.random_range(0.5e-6..4e-6),
            rng.random_range(0.0..80e-6),
            -rng.random_range(0.002..0.1),
        )
        .validate()
        .unwrap();
        let grid = auto_grid(&cfg);
        let scale = quantum_tof(grid, &cfg, false).peak().1;
        for _ in 0..20 {
            let t = rng.random_range(grid.t_start()..grid.t_end());
            let z = cfg.detector() + rng.random_range(-50e-6..50e-6);
            let a = current::current_breakdown(z, t, &cfg).total;
            let b = current::direct_current(z, t, &cfg);
            worst = worst.max((a - b).abs() / scale);
        }
    }
    let elapsed = start.elapsed();
    (
        worst < 1e-10 && elapsed < Duration::from_secs(5),
        format!("max relative deviation {worst:.2e} (limit 1e-10), {:.2} s (limit 5 s)", elapsed.as_secs_f64()),
    )
}

fn oracle_gate() -> Outcome {
    let start = Instant::now();
    let rs = ReducedScale::standard(false);
    let run = rs.run(vec![rs.n_steps / 2, rs.n_steps]).unwrap();
    let cmp = oracle::compare_with_closed_form(&run, &rs.cfg);
    let elapsed = start.elapsed();
    (
        cmp.psi_error < 1e-5 && cmp.current_error < 1e-5 && elapsed < Duration::from_secs(180),
        format!(
            "psi error {:.2e}, current error {:.2e} (limits 1e-5), norm drift {:.1e}, {:.0} s (limit 180 s)",
            cmp.psi_error,
            cmp.current_error,
            run.max_norm_drift,
            elapsed.as_secs_f64()
        ),
    )
}

fn continuity() -> Outcome {
    let rs = ReducedScale::standard(false);
    let [a, b, c] = oracle::continuity_study(&rs.cfg).unwrap();
    let (r1, r2) = (a.relative / b.relative, b.relative / c.relative);
    let second_order = |r: f64| (3.5..=4.5).contains(&r);
    (
        second_order(r1) && second_order(r2) && c.relative < 1e-4,
        format!(
            "residuals {:.2e} {:.2e} {:.2e}, ratios {r1:.2} {r2:.2} (want ~4), finest < 1e-4",
            a.relative, b.relative, c.relative
        ),
    )
}

fn normalization() -> Outcome {
    let cfg = standard_cat(50e-6);
    let worst = [0.0, 0.01, 0.045]
        .iter()
        .map(|&t| (analytic::norm(t, &cfg) - 1.0).abs())
        .fold(0.0, f64::max);
    let single = standard_cat(0.0);
    let total = fringe_report(&quantum_tof(auto_grid(&single), &single, false)).unwrap().total_prob;
    (
        worst < 1e-8 && (0.999..=1.02).contains(&total),
        format!("max |norm - 1| {worst:.2e} (limit 1e-8), single-packet integral {total:.6} (want [0.999, 1.02])"),
    )
}

fn classical_baseline() -> Outcome {
    let cloud = ThermalCloud::new(sodium(), 1e-6, 1e-6).unwrap();
    let (h, g) = (-0.01, 9.8);
    let curve = classical::classical_curve(classical::classical_auto_grid(h, &cloud, g), h, &cloud, g);
    let integral = curve.integral();
    let peak = classical::classical_peak(h, &cloud, g);
    let ballistic = (2.0 * h.abs() / g).sqrt();
    let run = classical::monte_carlo_tof(&cloud, h, g, 10_000_000, 1).unwrap();
    let ks = run.ks_statistic(|t| classical::classical_cdf(t, h, &cloud, g));
    let peak_rel = (peak / ballistic - 1.0).abs();
    (
        (integral - 1.0).abs() < 1e-6 && peak_rel < 5e-3 && ks < 1e-3,
        format!(
            "integral {integral:.9}, peak {peak:.6} s vs {ballistic:.6} s ({:.2}%), KS {ks:.2e} at 1e7 samples",
            100.0 * peak_rel
        ),
    )
}

fn separation_trend() -> Outcome {
    let values = [1e-6, 10e-6, 20e-6, 30e-6, 40e-6, 50e-6];
    let table = sweep(standard_cat(0.0).config(), SweepParam::Separation, &values, GridPolicy::Auto);
    let reports: Vec<_> = table.rows.iter().map(|r| r.report.clone().unwrap()).collect();
    let counts: Vec<usize> = reports.iter().map(|r| r.n_fringes).collect();
    let last = reports.last().unwrap();
    (
        counts.windows(2).all(|w| w[0] <= w[1]) && counts[0] == 0 && last.n_fringes >= 3 && last.visibility > 0.5,
        format!("fringes {counts:?}, visibility at 50 um {:.3}", last.visibility),
    )
}

fn mass_trend() -> Outcome {
    let m = sodium().mass();
    let values = [m, 2.0 * m, 4.0 * m, 8.0 * m];
    let table = sweep(standard_cat(50e-6).config(), SweepParam::Mass, &values, GridPolicy::Auto);
    let vis: Vec<f64> = table.rows.iter().map(|r| r.report.as_ref().unwrap().visibility).collect();
    (
        vis.windows(2).all(|w| w[1] < w[0]) && vis[3] < 0.5 * vis[0],
        format!("visibility {:?}", vis.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()),
    )
}

fn width_trend() -> Outcome {
    let values: Vec<f64> = (1..=6).map(|k| k as f64 * 1e-6).collect();
    let table = sweep(standard_cat(50e-6).config(), SweepParam::Width, &values, GridPolicy::Auto);
    let counts: Vec<usize> = table.rows.iter().map(|r| r.report.as_ref().unwrap().n_fringes).collect();
    (counts.windows(2).all(|w| w[0] >= w[1]), format!("fringes {counts:?}"))
}

fn peak(cfg: &ValidatedConfig) -> f64 {
    quantum_tof(auto_grid(cfg), cfg, false).peak().1
}

fn gravity_role() -> Outcome {
    let ratio = |h: f64| {
        let base = CatConfig::new(sodium(), 1e-6, 20e-6, h);
        let fall = base.clone().validate().unwrap();
        let free = base.with_gravity(Gravity::none()).validate().unwrap();
        peak(&fall) / peak(&free)
    };
    let (near, far) = (ratio(-0.01), ratio(-0.1));
    let within = |r: f64, target: f64| r > target / 3.0 && r < target * 3.0;
    (
        within(near, 1e5) && within(far, 1e6),
        format!("peak ratio {near:.3e} at 1 cm (want 1e5 within 3x), {far:.3e} at 10 cm (want 1e6 within 3x)"),
    )
}

fn surface_error(scenario: Scenario, cfg: &ValidatedConfig, x: f64, times: &[f64]) -> f64 {
    let reduced = scenario.reduced_config(cfg, x).unwrap();
    let j: Vec<f64> = times
        .iter()
        .map(|&t| current::direct_current(reduced.detector(), t, &reduced))
        .collect();
    let scale = j.iter().map(|v| v.abs()).fold(0.0, f64::max);
    times
        .iter()
        .zip(&j)
        .map(|(&t, jr)| (geometry::surface_flux(scenario, cfg, x, t).unwrap() - jr).abs() / scale)
        .fold(0.0, f64::max)
}

fn geometry_identities() -> Outcome {
    let cat = standard_cat(50e-6);
    let grid = auto_grid(&cat);
    let reference = quantum_tof(grid, &cat, false);
    let e1 = max_abs_diff(&geometry::pi1(grid, &cat), &reference) / reference.peak().1;

    let single = standard_cat(0.0);
    let sgrid = auto_grid(&single);
    let pulse = quantum_tof(sgrid, &single, false);
    let mut e3: f64 = 0.0;
    let mut pi3_fringes = 0;
    for d in [1e-6, 10e-6, 20e-6, 30e-6, 40e-6, 50e-6] {
        let s = geometry::pi3(sgrid, &standard_cat(d)).unwrap();
        e3 = e3.max(max_abs_diff(&s, &pulse) / pulse.peak().1);
        pi3_fringes += fringe_report(&s).unwrap().n_fringes;
    }

    let x = -0.01;
    let c20 = standard_cat(20e-6);
    let free = c20.map(|c| c.with_gravity(Gravity::none()).with_detector(x)).unwrap();
    let fgrid = auto_grid(&free);
    let free_ref = quantum_tof(fgrid, &free, false);
    let e4 = max_abs_diff(&geometry::pi4(fgrid, &c20, x).unwrap(), &free_ref) / free_ref.peak().1;

    let flux = [
        surface_error(Scenario::PI1, &cat, 0.0, &[0.0451, 0.0452]),
        surface_error(Scenario::PI2, &cat, 100e-6, &[0.03, 0.06]),
        surface_error(Scenario::PI3, &cat, 0.0, &[0.0449, 0.0452]),
        surface_error(Scenario::PI4, &c20, -100e-6, &[0.05, 0.07]),
    ];
    let flux_ok = flux.iter().all(|&e| e < 1e-6);
    (
        e1 <= 1e-14 && e3 <= 1e-12 && pi3_fringes == 0 && e4 <= 1e-14 && flux_ok,
        format!(
            "pi1 {e1:.1e}, pi3 {e3:.1e} with {pi3_fringes} fringes, pi4 {e4:.1e}, surface flux {:?}",
            flux.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>()
        ),
    )
}

fn delta_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let cfg = CatConfig::new(
            sodium().scaled(rng.random_range(0.5..8.0)).unwrap(),
            rng.random_range(0.3e-6..10e-6),
            rng.random_range(0.0..400e-6),
            -0.01,
        )
        .with_gravity(Gravity::new(rng.random_range(0.0..20.0)).unwrap())
        .validate()
        .unwrap();
        let (z, t) = (rng.random_range(-0.1..0.0), rng.random_range(0.0..0.3));
        let a = current::phase_delta(z, t, &cfg);
        let b = current::phase_delta_expanded(z, t, &cfg);
        if a != 0.0 {
            worst = worst.max(((a - b) / a).abs());
        }
    }
    let cat = standard_cat(50e-6);
    let at_start = current::phase_delta(-0.01, 0.0, &cat);
    let free = cat.map(|c| c.with_gravity(Gravity::none())).unwrap();
    let at_mid = [0.001, 0.1, 2.0]
        .iter()
        .map(|&t| current::phase_delta(current::packet_midpoint(t, &free), t, &free).abs())
        .fold(0.0, f64::max);
    (
        worst < 1e-12 && at_start == 0.0 && at_mid == 0.0,
        format!("max relative gap {worst:.2e} (limit 1e-12), delta(t=0) {at_start:e}, free midpoint {at_mid:e}"),
    )
}

fn qtof(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_qtof"))
        .args(args)
        .env("TOF_THREADS", "2")
        .output()
        .expect("qtof runs");
    assert!(out.status.success(), "qtof {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn determinism() -> Outcome {
    let commands: [&[&str]; 4] = [
        &["quantum", "--d", "30um", "--channels"],
        &["geometry", "--scenario", "pi4", "--d", "20um", "--X", "-2mm"],
        &["classical", "--monte-carlo", "200000", "--seed", "42", "--format", "json"],
        &["sweep", "--param", "mass", "--values", "1x,2x,4x"],
    ];
    let mut same = 0;
    for args in commands {
        if qtof(args) == qtof(args) {
            same += 1;
        }
    }
    (same == commands.len(), format!("{same} of {} commands byte-identical across runs", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("decomposition equivalence", decomposition),
        ("grid propagator vs closed form", oracle_gate),
        ("continuity convergence", continuity),
        ("normalization", normalization),
        ("classical baseline", classical_baseline),
        ("fringes grow with separation", separation_trend),
        ("visibility falls with mass", mass_trend),
        ("fringes fall with width", width_trend),
        ("gravity raises the peak", gravity_role),
        ("geometry identities", geometry_identities),
        ("phase consistency", delta_consistency),
        ("CLI determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(outcome) => outcome,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !passed {
            failed += 1;
        }
        let tag = if passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2}. {name}: {detail} [{:.1} s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
