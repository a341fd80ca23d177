//! Experiment configuration, runs, scoring and CSV outputs.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod output;

pub use config::{ExperimentConfig, Region};
pub use experiment::{
    aggregate, run_experiment, run_seed, trace_seed, Aggregate, AggregateStats, EstimateTrace,
    EstimatorMetrics, ExperimentReport, RunMetrics, SeedFailure, SeedResult, SeedRun, SeedTrace,
};
pub use metrics::{
    cp_error_series, low_pass, wind_error_series, ErrorSeries, PairedHistogram, SummaryStats,
};
pub use output::write_outputs;
