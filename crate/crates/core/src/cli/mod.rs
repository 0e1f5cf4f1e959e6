//! The `qtof` command line.
//!
//! Exit codes: 0 success, 1 failed verification or I/O error, 2 invalid
//! arguments or configuration, 3 every sweep row failed. Configuration
//! errors are reported on stderr as one JSON object
//! `{"error": {"kind": ..., "message": ...}}`.

pub mod output;
pub mod units;
pub mod verify;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analysis::{fringe_report, sweep, GridPolicy, SweepParam};
use crate::classical::{self, ThermalCloud};
use crate::constants::{SODIUM_23_MASS, STANDARD_GRAVITY};
use crate::current::{auto_grid, quantum_tof, TofSignal};
use crate::error::ConfigError;
use crate::geometry::{DetectionPlane, Scenario};
use crate::model::{sodium, CatConfig, Gravity, Particle, TimeGrid, ValidatedConfig};
use output::Metadata;
use units::{parse_length, parse_length_strict, parse_mass, parse_mass_or_factor, parse_temperature, parse_time};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "TOF_THREADS";

#[derive(Debug, Parser)]
#[command(name = "qtof", version, about = "Quantum and classical time-of-flight distributions of falling matter waves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Arrival-time density Π(t) = |J(H, t)| of the two-packet state.
    Quantum(QuantumArgs),
    /// Classical ballistic arrival density, optionally with Monte Carlo.
    Classical(ClassicalArgs),
    /// One of the four 3D detection geometries.
    Geometry(GeometryArgs),
    /// Fringe metrics over a list of parameter values.
    Sweep(SweepArgs),
    /// Numerical self-checks against the grid propagator.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Physical parameters of the two-packet state.
#[derive(Debug, Clone, Default, Args)]
pub struct StateArgs {
    /// JSON run configuration; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Particle mass in atomic mass units [default: 22.9897692820].
    #[arg(long = "mass-amu")]
    pub mass_amu: Option<f64>,
    /// Initial packet width, e.g. 1um [default: 1um].
    #[arg(long, allow_hyphen_values = true)]
    pub sigma0: Option<String>,
    /// Packet separation, e.g. 50um [default: 50um].
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<String>,
    /// Detector height, e.g. -1cm [default: -1cm].
    #[arg(long = "H", allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Gravitational acceleration in m/s^2 [default: 9.8].
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<f64>,
    /// Amplitude of the upper packet as `re,im` [default: 1/√2].
    #[arg(long, allow_hyphen_values = true)]
    pub c1: Option<String>,
    /// Amplitude of the lower packet as `re,im` [default: 1/√2].
    #[arg(long, allow_hyphen_values = true)]
    pub c2: Option<String>,
}

/// Sample times. Without `--t-start`/`--t-end` the window is chosen
/// automatically; without `--t-samples` so is the count.
#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long = "t-start", allow_hyphen_values = true)]
    pub t_start: Option<String>,
    #[arg(long = "t-end", allow_hyphen_values = true)]
    pub t_end: Option<String>,
    #[arg(long = "t-samples")]
    pub t_samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output file [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct QuantumArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also write j1, j2, cross, p12 and delta.
    #[arg(long)]
    pub channels: bool,
    /// Write the fringe report as JSON to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    /// Position of the vertical detection plane, e.g. -1cm [default: -1cm].
    #[arg(long = "X", allow_hyphen_values = true)]
    pub x: Option<String>,
    #[command(flatten)]
    pub inner: QuantumArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ClassicalArgs {
    /// Cloud temperature, e.g. 1uK [default: 1uK].
    #[arg(long, allow_hyphen_values = true)]
    pub temperature: Option<String>,
    #[arg(long = "mass-amu")]
    pub mass_amu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sigma0: Option<String>,
    #[arg(long = "H", allow_hyphen_values = true)]
    pub h: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Number of sampled trajectories.
    #[arg(long = "monte-carlo")]
    pub monte_carlo: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Histogram bins over the curve window.
    #[arg(long, default_value_t = 200)]
    pub bins: usize,
    /// Histogram CSV [default: next to --out with a `_hist` suffix].
    #[arg(long = "histogram-out")]
    pub histogram_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// One of d, mass, sigma0, g, H.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values with units, e.g. 1um,10um or 1x,2x.
    #[arg(long, allow_hyphen_values = true)]
    pub values: String,
    #[command(flatten)]
    pub state: StateArgs,
    /// CSV output; a JSON copy is written alongside with extension `.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Coarser grids and tenfold tolerances.
    #[arg(long)]
    pub quick: bool,
}

/// Contents of `--config`. Lengths and times carry unit suffixes.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    /// e.g. `"22.98977amu"` or `"3.8e-26kg"`.
    pub mass: Option<String>,
    pub label: Option<String>,
    pub sigma0: Option<String>,
    pub d: Option<String>,
    #[serde(rename = "H")]
    pub h: Option<String>,
    pub g: Option<f64>,
    pub c1: Option<[f64; 2]>,
    pub c2: Option<[f64; 2]>,
    pub t_start: Option<String>,
    pub t_end: Option<String>,
    pub t_samples: Option<usize>,
    pub scenario: Option<String>,
    #[serde(rename = "X")]
    pub x: Option<String>,
    pub channels: Option<bool>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl<'de> Deserialize<'de> for Format {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Format::from_str(&s, true).map_err(serde::de::Error::custom)
    }
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: Self = serde_json::from_str(text).map_err(|e| CliError::usage("InvalidConfigFile", e))?;
        for (name, value) in [("sigma0", &file.sigma0), ("d", &file.d), ("H", &file.h), ("X", &file.x)] {
            if let Some(v) = value {
                parse_length_strict(v).map_err(|e| CliError::usage("InvalidUnit", format!("{name}: {e}")))?;
            }
        }
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage { kind: &'static str, message: String },
    Config(ConfigError),
    Io(String),
    /// The reader of stdout went away; not an error.
    Closed,
    VerifyFailed,
    AllRowsFailed,
}

impl CliError {
    fn usage(kind: &'static str, message: impl ToString) -> Self {
        Self::Usage {
            kind,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage { .. } | Self::Config(_) => 2,
            Self::Closed => 0,
            Self::Io(_) | Self::VerifyFailed => 1,
            Self::AllRowsFailed => 3,
        }
    }

    fn report(&self) -> String {
        let (kind, message) = match self {
            Self::Usage { kind, message } => (*kind, message.clone()),
            Self::Config(e) => (e.kind(), e.to_string()),
            Self::Io(m) => ("Io", m.clone()),
            Self::Closed => ("Closed", String::new()),
            Self::VerifyFailed => ("VerifyFailed", "one or more checks failed".to_owned()),
            Self::AllRowsFailed => ("AllRowsFailed", "every sweep row failed".to_owned()),
        };
        serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Self::Closed;
        }
        Self::Io(e.to_string())
    }
}

fn unit_err(name: &str) -> impl Fn(String) -> CliError + '_ {
    move |e| CliError::usage("InvalidUnit", format!("--{name}: {e}"))
}

fn parse_amplitude(s: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| CliError::usage("InvalidAmplitude", format!("cannot read '{s}' as re,im")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(CliError::usage("InvalidAmplitude", format!("cannot read '{s}' as re,im"))),
    }
}

/// Command-line flags merged over an optional config file.
#[derive(Debug, Clone, Default)]
struct Resolved {
    file: RunConfigFile,
}

impl Resolved {
    fn load(state: &StateArgs) -> Result<Self, CliError> {
        let file = match &state.config {
            Some(p) => RunConfigFile::load(p)?,
            None => RunConfigFile::default(),
        };
        Ok(Self { file })
    }

    fn particle(&self, mass_amu: Option<f64>) -> Result<Particle, CliError> {
        let mass = match (mass_amu, &self.file.mass) {
            (Some(amu), _) => amu * crate::constants::ATOMIC_MASS_UNIT,
            (None, Some(m)) => parse_mass(m).map_err(unit_err("mass"))?,
            (None, None) => return Ok(sodium()),
        };
        if mass == SODIUM_23_MASS && self.file.label.is_none() {
            return Ok(sodium());
        }
        let label = self.file.label.clone().unwrap_or_else(|| format!("{}amu", mass / crate::constants::ATOMIC_MASS_UNIT));
        Ok(Particle::new(label, mass)?)
    }

    fn length(&self, flag: &Option<String>, file: &Option<String>, name: &str, default: f64) -> Result<f64, CliError> {
        match flag.as_ref().or(file.as_ref()) {
            Some(v) => parse_length(v).map_err(unit_err(name)),
            None => Ok(default),
        }
    }

    fn cat(&self, s: &StateArgs) -> Result<CatConfig, CliError> {
        let particle = self.particle(s.mass_amu)?;
        let sigma0 = self.length(&s.sigma0, &self.file.sigma0, "sigma0", 1e-6)?;
        let d = self.length(&s.d, &self.file.d, "d", 50e-6)?;
        let h = self.length(&s.h, &self.file.h, "H", -0.01)?;
        let g = s.g.or(self.file.g).unwrap_or(STANDARD_GRAVITY);
        let mut cfg = CatConfig::new(particle, sigma0, d, h).with_gravity(Gravity::new(g)?);
        let c1 = match (&s.c1, self.file.c1) {
            (Some(v), _) => Some(parse_amplitude(v)?),
            (None, Some([re, im])) => Some(Complex64::new(re, im)),
            _ => None,
        };
        let c2 = match (&s.c2, self.file.c2) {
            (Some(v), _) => Some(parse_amplitude(v)?),
            (None, Some([re, im])) => Some(Complex64::new(re, im)),
            _ => None,
        };
        if c1.is_some() || c2.is_some() {
            let (a, b) = (c1.unwrap_or(cfg.c1), c2.unwrap_or(cfg.c2));
            cfg = cfg.with_amplitudes(a, b);
        }
        Ok(cfg)
    }

    /// Explicit grid, or `None` for automatic, plus an explicit count.
    fn grid(&self, g: &GridArgs) -> Result<(Option<(f64, f64)>, Option<usize>), CliError> {
        let time = |flag: &Option<String>, file: &Option<String>, name: &str| -> Result<Option<f64>, CliError> {
            flag.as_ref()
                .or(file.as_ref())
                .map(|v| parse_time(v).map_err(unit_err(name)))
                .transpose()
        };
        let start = time(&g.t_start, &self.file.t_start, "t-start")?;
        let end = time(&g.t_end, &self.file.t_end, "t-end")?;
        let samples = g.t_samples.or(self.file.t_samples);
        let window = match (start, end) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(CliError::usage("InvalidTimeGrid", "--t-start and --t-end go together")),
        };
        Ok((window, samples))
    }

    fn format(&self, flag: Option<Format>) -> Format {
        flag.or(self.file.format).unwrap_or_default()
    }

    fn out(&self, flag: &Option<PathBuf>) -> Option<PathBuf> {
        flag.clone().or_else(|| self.file.out.clone())
    }
}

/// Resolves the time grid: explicit window or `fallback` (automatic).
fn build_grid(window: Option<(f64, f64)>, samples: Option<usize>, fallback: TimeGrid) -> Result<(TimeGrid, &'static str), CliError> {
    match window {
        Some((a, b)) => Ok((TimeGrid::new(a, b, samples.unwrap_or(4096))?, "explicit")),
        None => match samples {
            Some(n) => Ok((TimeGrid::new(fallback.t_start(), fallback.t_end(), n)?, "auto-window")),
            None => Ok((fallback, "auto")),
        },
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn state_metadata(meta: &mut Metadata, cfg: &ValidatedConfig) {
    let c = cfg.config();
    meta.push("particle", c.particle.label());
    meta.num("mass_kg", c.particle.mass());
    meta.num("sigma0_m", c.sigma0);
    meta.num("d_m", c.d);
    meta.num("H_m", c.detector);
    meta.num("g_m_s2", c.gravity.g());
    meta.push("c1", format!("{:e},{:e}", c.c1.re, c.c1.im));
    meta.push("c2", format!("{:e},{:e}", c.c2.re, c.c2.im));
    meta.num("hbar_J_s", cfg.hbar());
    meta.num("normalization", cfg.normalization());
}

fn grid_metadata(meta: &mut Metadata, grid: &TimeGrid, mode: &str) {
    meta.num("t_start_s", grid.t_start());
    meta.num("t_end_s", grid.t_end());
    meta.push("n_samples", grid.n_samples());
    meta.push("grid", mode);
}

fn write_signal(out: Option<&Path>, format: Format, meta: &Metadata, signal: &TofSignal) -> Result<(), CliError> {
    let mut w = open_output(out)?;
    match format {
        Format::Csv => output::write_signal_csv(&mut w, meta, signal)?,
        Format::Json => output::write_signal_json(&mut w, meta, signal)?,
    }
    w.flush()?;
    Ok(())
}

fn write_report(path: &Option<PathBuf>, signal: &TofSignal) -> Result<(), CliError> {
    if let Some(p) = path {
        let report = fringe_report(signal).map_err(|e| CliError::usage("WindowTooNarrow", e))?;
        let mut w = open_output(Some(p))?;
        output::write_json(&mut w, &report)?;
        w.flush()?;
    }
    Ok(())
}

fn scenario_signal(args: &QuantumArgs, scenario: Scenario, x: Option<f64>) -> Result<(), CliError> {
    let resolved = Resolved::load(&args.state)?;
    let cfg = resolved.cat(&args.state)?.validate()?;
    let reduced = scenario.reduced_config(&cfg, x.unwrap_or(0.0))?;
    let (window, samples) = resolved.grid(&args.grid)?;
    let (grid, mode) = build_grid(window, samples, auto_grid(&reduced))?;
    let channels = args.channels || resolved.file.channels.unwrap_or(false);
    let signal = quantum_tof(grid, &reduced, channels);

    let mut meta = Metadata::default();
    meta.push("scenario", scenario.name());
    state_metadata(&mut meta, &cfg);
    if let Some(x) = x {
        meta.num("X_m", x);
    }
    grid_metadata(&mut meta, &grid, mode);
    meta.push("channels", channels);
    write_signal(resolved.out(&args.output.out).as_deref(), resolved.format(args.output.format), &meta, &signal)?;
    write_report(&args.report, &signal)
}

fn cmd_quantum(args: &QuantumArgs) -> Result<(), CliError> {
    scenario_signal(args, Scenario::PI1, None)
}

fn cmd_geometry(args: &GeometryArgs) -> Result<(), CliError> {
    let resolved = Resolved::load(&args.inner.state)?;
    let name = args
        .scenario
        .clone()
        .or(resolved.file.scenario.clone())
        .ok_or_else(|| CliError::usage("MissingScenario", "--scenario is required (pi1, pi2, pi3 or pi4)"))?;
    let scenario: Scenario = name.parse().map_err(|e| CliError::usage("UnknownScenario", e))?;
    let x = match scenario.plane {
        DetectionPlane::Xy => None,
        DetectionPlane::Yz => Some(resolved.length(&args.x, &resolved.file.x, "X", -0.01)?),
    };
    scenario_signal(&args.inner, scenario, x)
}

fn cmd_classical(args: &ClassicalArgs) -> Result<(), CliError> {
    let resolved = Resolved::default();
    let particle = resolved.particle(args.mass_amu)?;
    let temperature = match &args.temperature {
        Some(t) => parse_temperature(t).map_err(unit_err("temperature"))?,
        None => 1e-6,
    };
    let sigma0 = resolved.length(&args.sigma0, &None, "sigma0", 1e-6)?;
    let h = resolved.length(&args.h, &None, "H", -0.01)?;
    let g = Gravity::new(args.g.unwrap_or(STANDARD_GRAVITY))?.g();
    let cloud = ThermalCloud::new(particle, sigma0, temperature)?;
    let (window, samples) = resolved.grid(&args.grid)?;
    let (grid, mode) = build_grid(window, samples, classical::classical_auto_grid(h, &cloud, g))?;
    let curve = classical::classical_curve(grid, h, &cloud, g);

    let mut meta = Metadata::default();
    meta.push("model", "classical");
    meta.push("particle", cloud.particle().label());
    meta.num("mass_kg", cloud.particle().mass());
    meta.num("temperature_K", temperature);
    meta.num("sigma0_m", sigma0);
    meta.num("sigma_v_m_s", cloud.sigma_v());
    meta.num("H_m", h);
    meta.num("g_m_s2", g);
    grid_metadata(&mut meta, &grid, mode);
    if curve.has_negative {
        meta.push("warning", "negative density; the formula assumes a detector below the cloud");
    }

    let mut hist = None;
    if let Some(n) = args.monte_carlo {
        let run = classical::monte_carlo_tof(&cloud, h, g, n, args.seed)
            .map_err(|e| CliError::usage("InvalidMonteCarlo", e))?;
        let ks = run.ks_statistic(|t| classical::classical_cdf(t, h, &cloud, g));
        meta.push("mc_samples", n);
        meta.push("mc_seed", args.seed);
        meta.push("mc_no_arrival", run.no_arrival);
        meta.num("ks_statistic", ks);
        eprintln!("{}", serde_json::json!({ "ks_statistic": ks, "mc_samples": n, "mc_no_arrival": run.no_arrival }));
        if args.bins == 0 {
            return Err(CliError::usage("InvalidMonteCarlo", "--bins must be positive"));
        }
        hist = Some(run.histogram(grid.t_start(), grid.t_end(), args.bins));
    }

    let times = grid.times();
    let out = args.output.out.as_deref();
    let mut w = open_output(out)?;
    match args.output.format.unwrap_or_default() {
        Format::Csv => output::write_curve_csv(&mut w, &meta, &times, &curve.density)?,
        Format::Json => {
            let mut doc = output::curve_json(&meta, &times, &curve.density);
            if let Some(h) = &hist {
                doc.insert("histogram".into(), serde_json::to_value(h).expect("histogram serializes"));
            }
            output::write_json(&mut w, &serde_json::Value::Object(doc))?;
        }
    }
    w.flush()?;

    if let (Some(h), Format::Csv) = (&hist, args.output.format.unwrap_or_default()) {
        let path = args.histogram_out.clone().or_else(|| {
            out.map(|p| {
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                p.with_file_name(format!("{stem}_hist.csv"))
            })
        });
        match path {
            Some(p) => {
                let mut hm = meta.clone();
                hm.push("histogram_bins", h.counts.len());
                hm.num("histogram_bin_width_s", h.bin_width);
                let mut w = open_output(Some(&p))?;
                output::write_curve_csv(&mut w, &hm, &h.centers(), &h.density)?;
                w.flush()?;
            }
            None => eprintln!("histogram not written: give --out or --histogram-out"),
        }
    }
    Ok(())
}

fn parse_sweep_values(param: SweepParam, list: &str, template: &CatConfig) -> Result<Vec<f64>, CliError> {
    let items: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::usage("EmptyValues", "--values needs at least one value"));
    }
    items
        .iter()
        .map(|v| {
            let r = match param {
                SweepParam::Separation | SweepParam::Width | SweepParam::Detector => parse_length(v),
                SweepParam::Mass => parse_mass_or_factor(v, template.particle.mass()),
                SweepParam::Gravity => v.parse::<f64>().map_err(|_| format!("cannot read '{v}' as m/s^2")),
            };
            r.map_err(|e| CliError::usage("InvalidUnit", format!("--values: {e}")))
        })
        .collect()
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let param = SweepParam::from_name(&args.param).ok_or_else(|| {
        CliError::usage("UnknownParameter", format!("unknown --param '{}' (expected d, mass, sigma0, g or H)", args.param))
    })?;
    let resolved = Resolved::load(&args.state)?;
    let template = resolved.cat(&args.state)?;
    let values = parse_sweep_values(param, &args.values, &template)?;
    let table = sweep(&template, param, &values, GridPolicy::Auto);

    let mut meta = Metadata::default();
    meta.push("parameter", param.name());
    meta.push("unit", param.unit());
    meta.push("values", &args.values);
    meta.push("particle", template.particle.label());
    meta.num("mass_kg", template.particle.mass());
    meta.num("sigma0_m", template.sigma0);
    meta.num("d_m", template.d);
    meta.num("H_m", template.detector);
    meta.num("g_m_s2", template.gravity.g());
    meta.push("grid", "auto");

    let out = resolved.out(&args.out);
    match (&out, resolved.format(args.format)) {
        (Some(p), _) => {
            let mut w = open_output(Some(p))?;
            output::write_sweep_csv(&mut w, &meta, &table)?;
            w.flush()?;
            let mut j = open_output(Some(&p.with_extension("json")))?;
            output::write_json(&mut j, &output::sweep_json(&meta, &table))?;
            j.flush()?;
        }
        (None, Format::Csv) => {
            let mut w = open_output(None)?;
            output::write_sweep_csv(&mut w, &meta, &table)?;
            w.flush()?;
        }
        (None, Format::Json) => {
            let mut w = open_output(None)?;
            output::write_json(&mut w, &output::sweep_json(&meta, &table))?;
            w.flush()?;
        }
    }
    if table.succeeded() == 0 {
        return Err(CliError::AllRowsFailed);
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs, opts: verify::VerifyOptions) -> Result<(), CliError> {
    let mut opts = opts;
    opts.quick = args.quick;
    let mut out = io::stdout().lock();
    if verify::run_checks(&opts, &mut out)? {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::usage("InvalidThreads", format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn dispatch(cli: &Cli, verify_opts: verify::VerifyOptions) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Quantum(a) => cmd_quantum(a),
        Command::Classical(a) => cmd_classical(a),
        Command::Geometry(a) => cmd_geometry(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a, verify_opts),
    }
}

fn run_with<I, T>(args: I, verify_opts: verify::VerifyOptions) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli, verify_opts) {
        Ok(()) | Err(CliError::Closed) => 0,
        Err(e) => {
            eprintln!("{}", e.report());
            e.exit_code()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, verify::VerifyOptions::default())
}
