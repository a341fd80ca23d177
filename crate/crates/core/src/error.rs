use std::path::PathBuf;

use thiserror::Error;

/// An input fell below the floor that guards a model singularity.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("{quantity} = {value} is below its floor {floor}")]
pub struct DomainError {
    pub quantity: &'static str,
    pub value: f64,
    pub floor: f64,
}

impl DomainError {
    pub(crate) fn check(quantity: &'static str, value: f64, floor: f64) -> Result<(), Self> {
        // NaN fails this comparison too
        if value >= floor {
            Ok(())
        } else {
            Err(Self {
                quantity,
                value,
                floor,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParameterError {
    #[error("{name} must be finite and strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("sample time {value} s exceeds the integrator bound of {max} s")]
    SampleTimeTooLarge { value: f64, max: f64 },
}

#[derive(Debug, Error)]
pub enum CpGridError {
    #[error("{axis} axis needs at least two points, got {len}")]
    AxisTooShort { axis: &'static str, len: usize },
    #[error("{axis} axis is not strictly increasing at index {index}")]
    NonMonotonicAxis { axis: &'static str, index: usize },
    #[error("grid body has {actual} values, expected {expected} ({rows} x {cols})")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in grid at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("innovation covariance is not positive: S = {value}")]
    NonPositiveInnovation { value: f64 },
    #[error("state estimate became non-finite: {x:?}")]
    NonFiniteState { x: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImmError {
    #[error("filter {mode} failed: {source}")]
    Filter {
        mode: usize,
        #[source]
        source: FilterError,
    },
    #[error("innovation covariance is not positive: S = {value}")]
    NonPositiveInnovation { value: f64 },
    #[error("mixing denominator for mode {mode} is zero")]
    ZeroMixingDenominator { mode: usize },
    #[error("transition matrix: {0}")]
    InvalidTransition(String),
    #[error("mode probabilities: {0}")]
    InvalidModeProbabilities(String),
    #[error("mode bank needs at least one filter")]
    EmptyBank,
    #[error("expected {expected} entries, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("rotor speed {omega} rad/s left [0, {limit}] at step {step} (t = {time} s)")]
    RotorSpeedOutOfRange {
        step: usize,
        time: f64,
        omega: f64,
        limit: f64,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Parameter(#[from] ParameterError),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("schedule has {schedule} samples but the run needs {needed}")]
    ScheduleTooShort { schedule: usize, needed: usize },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("serializing config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Parameter(#[from] ParameterError),
    #[error(transparent)]
    Imm(#[from] ImmError),
    #[error(transparent)]
    CpGrid(#[from] CpGridError),
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}
