//! Fringe and pulse metrics of arrival-time curves, and parameter sweeps.
//!
//! Extrema are found with a hysteresis (zigzag) filter: a maximum is
//! confirmed once the curve has dropped [`PROMINENCE`] × peak below it, and
//! a minimum once the curve has risen by the same amount. A fringe is an
//! internal minimum with confirmed maxima on both sides.
//!
//! Two contrast measures are reported. `max_contrast` is the best adjacent
//! `(Π_max − Π_min)/(Π_max + Π_min)`. Near a zero of `J` the minimum touches
//! zero, so this saturates near 1 whenever any fringe exists at all.
//! `visibility` instead weighs each fringe by its share of the pulse:
//!
//! ```text
//! V = Σ_fringes (M_lo − m) · |t(M_lo) − t(m)|  /  ∫Π dt
//! ```
//!
//! with `M_lo` the lower of the two neighbouring maxima and all extrema
//! refined by a parabola through the three nearest samples.

use rayon::prelude::*;
use serde::Serialize;

use crate::current::{auto_grid, quantum_tof, TofSignal};
use crate::error::{AnalysisError, ConfigError, SweepError};
use crate::model::{CatConfig, Gravity, TimeGrid, ValidatedConfig};
use crate::quad;

/// Hysteresis threshold relative to the global peak.
pub const PROMINENCE: f64 = 0.01;

/// Largest end value, relative to the peak, of a signal that covers the
/// whole pulse.
pub const EDGE_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub kind: ExtremumKind,
    pub index: usize,
    /// Parabola-refined position and value.
    pub t: f64,
    pub value: f64,
}

/// Alternating extrema of `values` with hysteresis `threshold`.
///
/// Returns `(kind, index)` pairs; a trailing rising run ends in a maximum.
pub fn zigzag(values: &[f64], threshold: f64) -> Vec<(ExtremumKind, usize)> {
    #[derive(PartialEq)]
    enum Mode {
        Start,
        Rising,
        Falling,
    }
    let mut out = Vec::new();
    let mut mode = Mode::Start;
    let (mut lo, mut hi) = (0, 0);
    for i in 1..values.len() {
        let v = values[i];
        if mode != Mode::Falling && v > values[hi] {
            hi = i;
        }
        if mode != Mode::Rising && v < values[lo] {
            lo = i;
        }
        if mode != Mode::Falling && values[hi] - v >= threshold {
            out.push((ExtremumKind::Max, hi));
            mode = Mode::Falling;
            lo = i;
        } else if mode != Mode::Rising && v - values[lo] >= threshold {
            if mode == Mode::Falling {
                out.push((ExtremumKind::Min, lo));
            }
            mode = Mode::Rising;
            hi = i;
        }
    }
    if mode == Mode::Rising {
        out.push((ExtremumKind::Max, hi));
    }
    out
}

/// Vertex of the parabola through samples `i − 1, i, i + 1`.
fn refine(grid: &TimeGrid, values: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= values.len() {
        return (grid.time(i), values[i]);
    }
    let (y0, y1, y2) = (values[i - 1], values[i], values[i + 1]);
    let den = y0 - 2.0 * y1 + y2;
    if den == 0.0 {
        return (grid.time(i), y1);
    }
    let x = 0.5 * (y0 - y2) / den;
    (grid.time(i) + x * grid.step(), y1 - 0.25 * (y0 - y2) * x)
}

pub fn extrema(grid: &TimeGrid, values: &[f64]) -> Vec<Extremum> {
    let peak = values.iter().copied().fold(0.0, f64::max);
    zigzag(values, PROMINENCE * peak)
        .into_iter()
        .map(|(kind, index)| {
            let (t, value) = refine(grid, values, index);
            Extremum { kind, index, t, value }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeReport {
    pub n_maxima: usize,
    /// Internal minima bracketed by maxima.
    pub n_fringes: usize,
    /// Pulse-weighted fringe depth, in `[0, 1]`.
    pub visibility: f64,
    /// Best adjacent max/min contrast, in `[0, 1]`.
    pub max_contrast: f64,
    /// `∫tΠ dt / ∫Π dt` (s).
    pub mean_arrival: f64,
    /// `∫Π dt`.
    pub total_prob: f64,
    pub peak_value: f64,
    pub peak_time: f64,
}

pub fn fringe_report(signal: &TofSignal) -> Result<FringeReport, AnalysisError> {
    fringe_report_samples(&signal.grid, &signal.pi)
}

/// [`fringe_report`] for bare samples on a uniform grid.
pub fn fringe_report_samples(grid: &TimeGrid, pi: &[f64]) -> Result<FringeReport, AnalysisError> {
    assert_eq!(grid.n_samples(), pi.len());
    let (ip, peak) = pi
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if !(peak > 0.0) {
        return Err(AnalysisError::EmptySignal);
    }
    let (first, last) = (pi[0] / peak, pi[pi.len() - 1] / peak);
    if first > EDGE_LIMIT || last > EDGE_LIMIT {
        return Err(AnalysisError::WindowTooNarrow { first, last });
    }

    let h = grid.step();
    let total_prob = quad::trapezoid(pi, h);
    let weighted: Vec<f64> = pi.iter().enumerate().map(|(i, p)| grid.time(i) * p).collect();
    let mean_arrival = quad::trapezoid(&weighted, h) / total_prob;

    let ext = extrema(grid, pi);
    let n_maxima = ext.iter().filter(|e| e.kind == ExtremumKind::Max).count();
    let mut n_fringes = 0;
    let mut depth = 0.0;
    let mut max_contrast: f64 = 0.0;
    for w in ext.windows(3) {
        let [left, mid, right] = [w[0], w[1], w[2]];
        if mid.kind != ExtremumKind::Min || left.kind != ExtremumKind::Max || right.kind != ExtremumKind::Max {
            continue;
        }
        n_fringes += 1;
        let lower = if left.value < right.value { left } else { right };
        depth += (lower.value - mid.value).max(0.0) * (lower.t - mid.t).abs();
        for side in [left, right] {
            let sum = side.value + mid.value;
            if sum > 0.0 {
                max_contrast = max_contrast.max(((side.value - mid.value) / sum).clamp(0.0, 1.0));
            }
        }
    }
    let (peak_time, peak_value) = refine(grid, pi, ip);

    Ok(FringeReport {
        n_maxima,
        n_fringes,
        visibility: (depth / total_prob).clamp(0.0, 1.0),
        max_contrast,
        mean_arrival,
        total_prob,
        peak_value,
        peak_time,
    })
}

/// The parameter varied in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    /// Packet separation `d` (m).
    Separation,
    /// Particle mass (kg).
    Mass,
    /// Initial width `σ₀` (m).
    Width,
    /// Gravitational acceleration (m/s²).
    Gravity,
    /// Detector position `H` (m).
    Detector,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Separation => "d",
            Self::Mass => "mass",
            Self::Width => "sigma0",
            Self::Gravity => "g",
            Self::Detector => "H",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Self::Separation | Self::Width | Self::Detector => "m",
            Self::Mass => "kg",
            Self::Gravity => "m/s^2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::Separation, Self::Mass, Self::Width, Self::Gravity, Self::Detector]
            .into_iter()
            .find(|p| p.name() == name)
    }

    /// `template` with this parameter set to `value`.
    pub fn apply(self, template: &CatConfig, value: f64) -> Result<ValidatedConfig, ConfigError> {
        let mut cfg = template.clone();
        match self {
            Self::Separation => cfg.d = value,
            Self::Mass => cfg.particle = cfg.particle.scaled(value / cfg.particle.mass())?,
            Self::Width => cfg.sigma0 = value,
            Self::Gravity => cfg.gravity = Gravity::new(value)?,
            Self::Detector => cfg.detector = value,
        }
        cfg.validate()
    }
}

/// How each sweep row picks its time grid.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GridPolicy {
    /// [`auto_grid`] for every row.
    #[default]
    Auto,
    Fixed(TimeGrid),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub report: Option<FringeReport>,
    pub error: Option<String>,
    pub error_kind: Option<&'static str>,
}

impl SweepRow {
    fn new(value: f64, result: Result<FringeReport, SweepError>) -> Self {
        match result {
            Ok(report) => Self {
                value,
                report: Some(report),
                error: None,
                error_kind: None,
            },
            Err(e) => Self {
                value,
                report: None,
                error_kind: Some(e.kind()),
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub parameter: &'static str,
    pub unit: &'static str,
    /// Sorted by `value`.
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn succeeded(&self) -> usize {
        self.rows.iter().filter(|r| r.report.is_some()).count()
    }
}

/// One row per value, evaluated concurrently. A row whose configuration
/// is invalid or whose pulse is cut off records the error and the sweep
/// carries on.
pub fn sweep(template: &CatConfig, param: SweepParam, values: &[f64], policy: GridPolicy) -> SweepTable {
    let mut rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&value| {
            let result = param.apply(template, value).map_err(SweepError::from).and_then(|cfg| {
                let grid = match policy {
                    GridPolicy::Auto => auto_grid(&cfg),
                    GridPolicy::Fixed(g) => g,
                };
                Ok(fringe_report(&quantum_tof(grid, &cfg, false))?)
            });
            SweepRow::new(value, result)
        })
        .collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    SweepTable {
        parameter: param.name(),
        unit: param.unit(),
        rows,
    }
}
