use thiserror::Error;

/// Invalid experiment parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("initial width must be positive, got {0} m")]
    NonPositiveWidth(f64),
    #[error("particle mass must be positive, got {0} kg")]
    NonPositiveMass(f64),
    #[error("packet separation must be non-negative, got {0} m")]
    NegativeSeparation(f64),
    #[error("both superposition amplitudes are zero")]
    ZeroAmplitudes,
    #[error("superposition amplitudes cancel: the state has zero norm")]
    VanishingState,
    #[error("gravity must be non-negative, got {0} m/s^2")]
    NegativeGravity(f64),
    #[error("temperature must be non-negative, got {0} K")]
    NegativeTemperature(f64),
    #[error("{0} is not finite")]
    NonFinite(&'static str),
    #[error("invalid time grid: need 0 <= t_start < t_end and n_samples >= 2 (got {t_start}, {t_end}, {n_samples})")]
    InvalidTimeGrid {
        t_start: f64,
        t_end: f64,
        n_samples: usize,
    },
}

impl ConfigError {
    /// Stable machine-readable kind, used in CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NonPositiveWidth(_) => "NonPositiveWidth",
            Self::NonPositiveMass(_) => "NonPositiveMass",
            Self::NegativeSeparation(_) => "NegativeSeparation",
            Self::ZeroAmplitudes => "ZeroAmplitudes",
            Self::VanishingState => "VanishingState",
            Self::NegativeGravity(_) => "NegativeGravity",
            Self::NegativeTemperature(_) => "NegativeTemperature",
            Self::NonFinite(_) => "NonFinite",
            Self::InvalidTimeGrid { .. } => "InvalidTimeGrid",
        }
    }
}

/// Failures of the closed-form PDE residual check.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidualError {
    #[error("spatial grid needs at least 3 points")]
    TooFewPoints,
    #[error("spatial grid is not uniformly spaced")]
    NonUniformGrid,
    #[error("time step must be positive, got {0} s")]
    NonPositiveStep(f64),
    #[error("grid spacing {dz} m exceeds resolution limit {limit} m")]
    GridTooCoarse { dz: f64, limit: f64 },
}

/// Failures of the classical ballistic model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassicalError {
    #[error("arrival time must be positive, got {0} s")]
    NonPositiveTime(f64),
    #[error("Monte Carlo needs at least one sample")]
    NoSamples,
}

/// Failures of the split-step grid propagator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid needs a power-of-two point count >= 1024 and z_min < z_max (got n = {n}, [{z_min}, {z_max}])")]
    InvalidGrid { z_min: f64, z_max: f64, n: usize },
    #[error("field has {got} points, grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("initial field norm is {0}, expected 1")]
    NotNormalized(f64),
    #[error("time step must be positive and finite, got {0} s")]
    InvalidStep(f64),
    #[error("norm drifted by {drift:e} at step {step}")]
    NormDrift { step: usize, drift: f64 },
    #[error("probability {prob:e} within the edge points at step {step}")]
    BoundaryLeak { step: usize, prob: f64 },
    #[error("no snapshot stored at step {0}")]
    MissingSnapshot(usize),
    #[error("time index {k} outside 1..={max}")]
    IndexOutOfRange { k: usize, max: usize },
}

/// Failures of the fringe analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("signal does not cover the full pulse: ends at {first:e} and {last:e} of the peak (limit 1e-4)")]
    WindowTooNarrow { first: f64, last: f64 },
    #[error("signal is identically zero")]
    EmptySignal,
}

/// A failed sweep row.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl SweepError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(e) => e.kind(),
            Self::Analysis(AnalysisError::WindowTooNarrow { .. }) => "WindowTooNarrow",
            Self::Analysis(AnalysisError::EmptySignal) => "EmptySignal",
        }
    }
}
