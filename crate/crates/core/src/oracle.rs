//! Split-step Fourier propagation on a periodic grid.
//!
//! The grid solver knows nothing about the closed-form packets: it starts
//! from sampled Gaussians, applies Strang steps
//! `e^{−iT dt/2ħ} e^{−iV dt/ħ} e^{−iT dt/2ħ}` with the kinetic factor in
//! momentum space, and extracts the current from the grid field. Comparing
//! its output with [`crate::analytic`] and [`crate::current`] is the
//! independent check of the closed form.
//!
//! For `V = m g z` the splitting is exact apart from a global phase
//! `−m g² dt² t / 12ħ` (see [`strang_phase`]).

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::io::{self, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::OracleError;
use crate::model::ValidatedConfig;

/// Points at each edge watched for leakage.
pub const EDGE_POINTS: usize = 5;
/// Largest tolerated edge probability.
pub const LEAK_LIMIT: f64 = 1e-10;
/// Largest tolerated norm deviation.
pub const DRIFT_LIMIT: f64 = 1e-8;

/// Periodic grid `zᵢ = z_min + i dz`, `dz = (z_max − z_min)/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    z_min: f64,
    z_max: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(z_min: f64, z_max: f64, n: usize) -> Result<Self, OracleError> {
        let ok = n >= 1024 && n.is_power_of_two() && z_min.is_finite() && z_max.is_finite() && z_min < z_max;
        if !ok {
            return Err(OracleError::InvalidGrid { z_min, z_max, n });
        }
        Ok(Self { z_min, z_max, n })
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / self.n as f64
    }

    pub fn z(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.dz()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.z(i)).collect()
    }

    /// Angular wavenumbers in FFT order; the Nyquist mode is `−π/dz`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let dk = 2.0 * PI / (self.z_max - self.z_min);
        (0..n).map(|i| if i < n / 2 { i } else { i - n } as f64 * dk).collect()
    }

    /// `Σ|ψ|² dz`.
    pub fn norm(&self, psi: &[Complex64]) -> f64 {
        psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dz()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Free,
    /// `V = m g z`.
    Gravity(f64),
}

impl Potential {
    fn energy(self, mass: f64, z: f64) -> f64 {
        match self {
            Self::Free => 0.0,
            Self::Gravity(g) => mass * g * z,
        }
    }

    fn g(self) -> f64 {
        match self {
            Self::Free => 0.0,
            Self::Gravity(g) => g,
        }
    }
}

/// Everything needed for one run besides the initial field.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationSpec {
    pub grid: Grid1D,
    pub potential: Potential,
    pub mass: f64,
    pub hbar: f64,
    pub dt: f64,
    pub n_steps: usize,
    /// Steps (0 = initial field) at which the full field is stored.
    pub snapshot_steps: Vec<usize>,
    /// Detector position sampled after every step.
    pub probe: Option<f64>,
    /// Fail on probability reaching the grid edges. Off only for fields
    /// that are meant to fill the box, such as plane waves.
    pub monitor_edges: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub psi: Vec<Complex64>,
}

/// Field and current at a fixed `z`, one entry per step (including `t = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorTrace {
    pub z: f64,
    pub times: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub current: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationRun {
    pub spec: PropagationSpec,
    pub snapshots: Vec<Snapshot>,
    pub trace: Option<DetectorTrace>,
    pub max_norm_drift: f64,
    pub max_edge_prob: f64,
}

impl PropagationRun {
    pub fn snapshot(&self, step: usize) -> Option<&Snapshot> {
        self.snapshots
            .binary_search_by_key(&step, |s| s.step)
            .ok()
            .map(|i| &self.snapshots[i])
    }
}

struct Transforms {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Transforms {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::default(); len],
        }
    }

    fn forward(&mut self, data: &mut [Complex64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
    }

    /// Normalized inverse.
    fn inverse(&mut self, data: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, &mut self.scratch);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }
}

fn edge_probability(grid: &Grid1D, psi: &[Complex64]) -> f64 {
    let n = psi.len();
    let sum: f64 = psi[..EDGE_POINTS]
        .iter()
        .chain(&psi[n - EDGE_POINTS..])
        .map(|c| c.norm_sqr())
        .sum();
    sum * grid.dz()
}

/// Spectral point evaluation of `ψ` and `∂zψ` at `z` from FFT coefficients.
struct Probe {
    z: f64,
    basis: Vec<Complex64>,
    ik_basis: Vec<Complex64>,
}

impl Probe {
    fn new(grid: &Grid1D, z: f64) -> Self {
        let n = grid.len();
        let ks = grid.wavenumbers();
        let scale = 1.0 / n as f64;
        let basis: Vec<Complex64> = ks
            .iter()
            .map(|&k| Complex64::from_polar(scale, k * (z - grid.z_min())))
            .collect();
        let ik_basis = basis
            .iter()
            .zip(&ks)
            .enumerate()
            .map(|(i, (b, &k))| if i == n / 2 { Complex64::default() } else { b * Complex64::new(0.0, k) })
            .collect();
        Self { z, basis, ik_basis }
    }

    fn eval(&self, spectrum: &[Complex64]) -> (Complex64, Complex64) {
        let mut psi = Complex64::default();
        let mut grad = Complex64::default();
        for ((c, b), ib) in spectrum.iter().zip(&self.basis).zip(&self.ik_basis) {
            psi += c * b;
            grad += c * ib;
        }
        (psi, grad)
    }
}

/// Evolves `initial` with Strang splitting.
///
/// Fails with [`OracleError::NormDrift`] if `|Σ|ψ|²dz − 1|` exceeds
/// [`DRIFT_LIMIT`], or [`OracleError::BoundaryLeak`] if the probability in
/// the [`EDGE_POINTS`] outermost points at either end exceeds
/// [`LEAK_LIMIT`], checked at every step.
pub fn propagate(initial: &[Complex64], spec: &PropagationSpec) -> Result<PropagationRun, OracleError> {
    let grid = spec.grid;
    let n = grid.len();
    if initial.len() != n {
        return Err(OracleError::LengthMismatch {
            expected: n,
            got: initial.len(),
        });
    }
    if !(spec.dt > 0.0 && spec.dt.is_finite()) {
        return Err(OracleError::InvalidStep(spec.dt));
    }
    let norm0 = grid.norm(initial);
    if (norm0 - 1.0).abs() > 1e-6 {
        return Err(OracleError::NotNormalized(norm0));
    }

    let (m, hbar, dt) = (spec.mass, spec.hbar, spec.dt);
    let half_kinetic: Vec<Complex64> = grid
        .wavenumbers()
        .iter()
        .map(|&k| Complex64::from_polar(1.0, -hbar * k * k * dt / (4.0 * m)))
        .collect();
    let potential: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|&z| Complex64::from_polar(1.0, -spec.potential.energy(m, z) * dt / hbar))
        .collect();

    let mut snapshot_steps = spec.snapshot_steps.clone();
    snapshot_steps.sort_unstable();
    snapshot_steps.dedup();
    let mut wanted = snapshot_steps.iter().copied().filter(|&s| s <= spec.n_steps).peekable();

    let mut fft = Transforms::new(n);
    let probe = spec.probe.map(|z| Probe::new(&grid, z));
    let mut trace = probe.as_ref().map(|p| DetectorTrace {
        z: p.z,
        times: Vec::with_capacity(spec.n_steps + 1),
        psi: Vec::with_capacity(spec.n_steps + 1),
        current: Vec::with_capacity(spec.n_steps + 1),
    });

    let mut field = initial.to_vec();
    let mut snapshots = Vec::new();
    let mut max_edge_prob = edge_probability(&grid, &field);
    let mut max_norm_drift = (norm0 - 1.0).abs();
    fft.forward(&mut field);
    let spectral_norm = |f: &[Complex64]| grid.norm(f) / n as f64;

    let mut record = |step: usize,
                      spectrum: &[Complex64],
                      fft: &mut Transforms,
                      snapshots: &mut Vec<Snapshot>|
     -> Result<(), OracleError> {
        let t = step as f64 * dt;
        if let (Some(p), Some(tr)) = (&probe, trace.as_mut()) {
            let (psi, grad) = p.eval(spectrum);
            tr.times.push(t);
            tr.psi.push(psi);
            tr.current.push(hbar / m * (psi.conj() * grad).im);
        }
        if wanted.peek() == Some(&step) {
            wanted.next();
            let mut psi = spectrum.to_vec();
            fft.inverse(&mut psi);
            snapshots.push(Snapshot { step, t, psi });
        }
        Ok(())
    };

    record(0, &field, &mut fft, &mut snapshots)?;
    for step in 1..=spec.n_steps {
        field.iter_mut().zip(&half_kinetic).for_each(|(c, k)| *c *= k);
        fft.inverse(&mut field);
        field.iter_mut().zip(&potential).for_each(|(c, v)| *c *= v);
        let prob = edge_probability(&grid, &field);
        max_edge_prob = max_edge_prob.max(prob);
        if spec.monitor_edges && prob > LEAK_LIMIT {
            return Err(OracleError::BoundaryLeak { step, prob });
        }
        fft.forward(&mut field);
        field.iter_mut().zip(&half_kinetic).for_each(|(c, k)| *c *= k);

        let drift = (spectral_norm(&field) - 1.0).abs();
        max_norm_drift = max_norm_drift.max(drift);
        if drift > DRIFT_LIMIT {
            return Err(OracleError::NormDrift { step, drift });
        }
        record(step, &field, &mut fft, &mut snapshots)?;
    }

    Ok(PropagationRun {
        spec: spec.clone(),
        snapshots,
        trace,
        max_norm_drift,
        max_edge_prob,
    })
}

/// Global phase accumulated by Strang splitting under `V = m g z` after
/// time `t` with step `dt`: `−m g² dt² t / 12ħ`.
pub fn strang_phase(spec: &PropagationSpec, t: f64) -> f64 {
    let g = spec.potential.g();
    -spec.mass * g * g * spec.dt * spec.dt * t / (12.0 * spec.hbar)
}

/// Discretization of `∂z` in [`grid_current`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Derivative {
    #[default]
    Spectral,
    FourthOrder,
}

/// Periodic derivative of a sampled field.
pub fn derivative(field: &[Complex64], grid: &Grid1D, mode: Derivative) -> Vec<Complex64> {
    let n = field.len();
    match mode {
        Derivative::Spectral => {
            let mut fft = Transforms::new(n);
            let mut data = field.to_vec();
            fft.forward(&mut data);
            for (i, (c, k)) in data.iter_mut().zip(grid.wavenumbers()).enumerate() {
                *c *= if i == n / 2 { Complex64::default() } else { Complex64::new(0.0, k) };
            }
            fft.inverse(&mut data);
            data
        }
        Derivative::FourthOrder => {
            let h = grid.dz();
            (0..n)
                .map(|i| {
                    let at = |o: isize| field[(i as isize + o).rem_euclid(n as isize) as usize];
                    (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h)
                })
                .collect()
        }
    }
}

/// `J = (iħ/2m)(ψ ∂zψ* − ψ* ∂zψ)` on the grid.
pub fn grid_current(psi: &[Complex64], grid: &Grid1D, mass: f64, hbar: f64, mode: Derivative) -> Vec<f64> {
    let grad = derivative(psi, grid, mode);
    psi.iter()
        .zip(&grad)
        .map(|(p, d)| {
            let j = Complex64::new(0.0, hbar / (2.0 * mass)) * (p * d.conj() - p.conj() * d);
            j.re
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityResidual {
    /// `‖∂t|ψ|² + ∂zJ‖₂` (1/(m·s) · √m).
    pub absolute: f64,
    /// Absolute residual over `‖∂zJ‖₂`; infinite when `∂zJ ≡ 0`.
    pub relative: f64,
}

/// Residual of `∂t|ψ|² + ∂zJ = 0` at step `k`, using the snapshots at
/// `k − 1` and `k + 1` for the time derivative and spectral `∂z`.
pub fn continuity_residual(run: &PropagationRun, k: usize) -> Result<ContinuityResidual, OracleError> {
    let max = run.spec.n_steps.saturating_sub(1);
    if k < 1 || k > max {
        return Err(OracleError::IndexOutOfRange { k, max });
    }
    let get = |s: usize| run.snapshot(s).ok_or(OracleError::MissingSnapshot(s));
    let (before, now, after) = (get(k - 1)?, get(k)?, get(k + 1)?);
    let grid = run.spec.grid;
    let j = grid_current(&now.psi, &grid, run.spec.mass, run.spec.hbar, Derivative::Spectral);
    let j: Vec<Complex64> = j.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let div = derivative(&j, &grid, Derivative::Spectral);
    let dt2 = 2.0 * run.spec.dt;
    let mut res = 0.0;
    let mut scale = 0.0;
    for i in 0..grid.len() {
        let drho = (after.psi[i].norm_sqr() - before.psi[i].norm_sqr()) / dt2;
        res += (drho + div[i].re).powi(2);
        scale += div[i].re.powi(2);
    }
    let absolute = (res * grid.dz()).sqrt();
    let scale = (scale * grid.dz()).sqrt();
    Ok(ContinuityResidual {
        absolute,
        relative: if scale > 0.0 { absolute / scale } else { f64::INFINITY },
    })
}

/// Two sampled Gaussians of width `σ₀` at `z = 0` and `z = −d`, weighted by
/// `c1`, `c2` and normalized on the grid.
pub fn initial_cat(grid: &Grid1D, cfg: &ValidatedConfig) -> Vec<Complex64> {
    let s0 = cfg.sigma0();
    let gauss = |z: f64| (-(z * z) / (4.0 * s0 * s0)).exp();
    let mut psi: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|&z| cfg.c1() * gauss(z) + cfg.c2() * gauss(z + cfg.d()))
        .collect();
    let scale = 1.0 / grid.norm(&psi).sqrt();
    psi.iter_mut().for_each(|c| *c *= scale);
    psi
}

/// Writes one field as CSV with columns `z_m,re_psi,im_psi`.
pub fn write_snapshot_csv(mut out: impl Write, grid: &Grid1D, psi: &[Complex64]) -> io::Result<()> {
    writeln!(out, "z_m,re_psi,im_psi")?;
    for (i, c) in psi.iter().enumerate() {
        writeln!(out, "{:.14e},{:.14e},{:.14e}", grid.z(i), c.re, c.im)?;
    }
    Ok(())
}

/// Writes every stored snapshot to `dir/snapshot_<step>.csv`.
pub fn dump_snapshots(run: &PropagationRun, dir: &Path) -> io::Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    run.snapshots
        .iter()
        .map(|s| {
            let path = dir.join(format!("snapshot_{:07}.csv", s.step));
            let file = io::BufWriter::new(std::fs::File::create(&path)?);
            write_snapshot_csv(file, &run.spec.grid, &s.psi)?;
            Ok(path)
        })
        .collect()
}

/// Parameters of a reduced-scale comparison run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedScale {
    pub cfg: ValidatedConfig,
    pub grid: Grid1D,
    pub dt: f64,
    pub n_steps: usize,
}

impl ReducedScale {
    /// Sodium, `σ₀ = 0.1 μm`, `d = 2 μm`, detector at `−0.5 mm`, 25 ms on
    /// `2¹⁹` points over `[−7, 3.5] mm`. With `quick`, 12 ms on `2¹⁸`
    /// points over `[−2, 1.5] mm`.
    pub fn standard(quick: bool) -> Self {
        use crate::model::{sodium, CatConfig};
        let cfg = CatConfig::new(sodium(), 0.1e-6, 2e-6, -0.5e-3)
            .validate()
            .expect("reduced-scale parameters are valid");
        let (grid, n_steps) = if quick {
            (Grid1D::new(-2e-3, 1.5e-3, 1 << 18), 120)
        } else {
            (Grid1D::new(-7e-3, 3.5e-3, 1 << 19), 250)
        };
        Self {
            cfg,
            grid: grid.expect("reduced-scale grid is valid"),
            dt: 1e-4,
            n_steps,
        }
    }

    pub fn spec(&self, snapshot_steps: Vec<usize>) -> PropagationSpec {
        PropagationSpec {
            grid: self.grid,
            potential: Potential::Gravity(self.cfg.g()),
            mass: self.cfg.mass(),
            hbar: self.cfg.hbar(),
            dt: self.dt,
            n_steps: self.n_steps,
            snapshot_steps,
            probe: Some(self.cfg.detector()),
            monitor_edges: true,
        }
    }

    pub fn run(&self, snapshot_steps: Vec<usize>) -> Result<PropagationRun, OracleError> {
        propagate(&initial_cat(&self.grid, &self.cfg), &self.spec(snapshot_steps))
    }
}

/// Agreement between a grid run and the closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    /// `max|ψ_grid e^{−iφ} − Ψ| / max|Ψ|` over stored snapshots, with `φ`
    /// from [`strang_phase`].
    pub psi_error: f64,
    /// Phase of `⟨Ψ|ψ_grid⟩` at the last snapshot, for comparison with
    /// the predicted splitting phase.
    pub fitted_phase: f64,
    pub predicted_phase: f64,
    /// `max|J_grid(H,t) − J(H,t)| / max|J(H,t)|` over all steps.
    pub current_error: f64,
}

/// Compares a run with the closed-form amplitude and current.
pub fn compare_with_closed_form(run: &PropagationRun, cfg: &ValidatedConfig) -> OracleComparison {
    use crate::analytic::cat_amplitude;
    use crate::current::direct_current;

    let grid = run.spec.grid;
    let mut psi_error: f64 = 0.0;
    let mut fitted_phase = 0.0;
    let mut predicted_phase = 0.0;
    for snap in &run.snapshots {
        let phase = Complex64::from_polar(1.0, -strang_phase(&run.spec, snap.t));
        let mut worst: f64 = 0.0;
        let mut peak: f64 = 0.0;
        let mut overlap = Complex64::default();
        for (i, g) in snap.psi.iter().enumerate() {
            let exact = cat_amplitude(grid.z(i), snap.t, cfg);
            worst = worst.max((g * phase - exact).norm());
            peak = peak.max(exact.norm());
            overlap += exact.conj() * g;
        }
        psi_error = psi_error.max(worst / peak);
        fitted_phase = overlap.arg();
        predicted_phase = strang_phase(&run.spec, snap.t);
    }

    let current_error = run.trace.as_ref().map_or(f64::NAN, |tr| {
        let exact: Vec<f64> = tr.times.iter().map(|&t| direct_current(tr.z, t, cfg)).collect();
        let scale = exact.iter().fold(0.0f64, |a, j| a.max(j.abs()));
        let worst = tr
            .current
            .iter()
            .zip(&exact)
            .fold(0.0f64, |a, (g, e)| a.max((g - e).abs()));
        worst / scale
    });

    OracleComparison {
        psi_error,
        fitted_phase,
        predicted_phase,
        current_error,
    }
}

/// Relative continuity residual at `t0` for three runs with `dz` and `dt`
/// halved each time, finest last.
pub fn continuity_study(cfg: &ValidatedConfig) -> Result<[ContinuityResidual; 3], OracleError> {
    let t0 = 2e-3;
    let mut out = [ContinuityResidual {
        absolute: 0.0,
        relative: 0.0,
    }; 3];
    for (level, slot) in out.iter_mut().enumerate() {
        let grid = Grid1D::new(-0.4e-3, 0.3e-3, 1 << (14 + level))?;
        let dt = 4e-6 / (1 << level) as f64;
        let k = (t0 / dt).round() as usize;
        let spec = PropagationSpec {
            grid,
            potential: Potential::Gravity(cfg.g()),
            mass: cfg.mass(),
            hbar: cfg.hbar(),
            dt,
            n_steps: k + 1,
            snapshot_steps: vec![k - 1, k, k + 1],
            probe: None,
            monitor_edges: true,
        };
        let run = propagate(&initial_cat(&grid, cfg), &spec)?;
        *slot = continuity_residual(&run, k)?;
    }
    Ok(out)
}
