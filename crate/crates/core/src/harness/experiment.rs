//! Seeded comparison runs of the IMM bank against a single nominal EKF.

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{cp_error_series, wind_error_series, PairedHistogram, SummaryStats};
use crate::ekf::{EstimatorState, ExtendedKalmanFilter, NoiseModel, StateModel};
use crate::error::ConfigError;
use crate::imm::{FilterSlot, ModeBank};
use crate::plant::{generate_cp_schedule, simulate_plant, PlantTrajectory, TrueCpSchedule};
use crate::turbine::TurbineModel;

/// Per-sample estimates of one estimator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EstimateTrace {
    pub wind: Vec<f64>,
    pub cp: Vec<f64>,
}

/// Everything recorded during one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedTrace {
    pub plant: PlantTrajectory,
    pub schedule: TrueCpSchedule,
    pub imm: EstimateTrace,
    pub kf: EstimateTrace,
    /// Posterior mode probabilities, one row per sample.
    pub mode_probabilities: Vec<Vec<f64>>,
}

impl SeedTrace {
    pub fn rews(&self) -> Vec<f64> {
        self.plant.records.iter().map(|r| r.wind).collect()
    }

    pub fn cp_true(&self) -> Vec<f64> {
        self.plant.records.iter().map(|r| r.cp).collect()
    }
}

/// Error statistics (%) of one estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorMetrics {
    pub wind: SummaryStats,
    pub cp: SummaryStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub imm: EstimatorMetrics,
    pub kf: EstimatorMetrics,
    pub wind_histogram: PairedHistogram,
    pub cp_histogram: PairedHistogram,
    /// Initial window excluded from scoring (s).
    pub settle_time: f64,
}

/// Why a seed produced no metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedFailure {
    pub stage: &'static str,
    pub message: String,
}

impl std::fmt::Display for SeedFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedRun {
    pub metrics: RunMetrics,
    pub trace: SeedTrace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub outcome: Result<SeedRun, SeedFailure>,
}

/// Seed-averaged statistics of one estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateStats {
    pub wind_mean: f64,
    /// Mean over seeds of the per-seed `|mean|`.
    pub wind_abs_mean: f64,
    pub wind_std: f64,
    pub cp_mean: f64,
    pub cp_abs_mean: f64,
    pub cp_std: f64,
}

impl AggregateStats {
    fn of(metrics: &[&EstimatorMetrics]) -> Self {
        let avg = |f: &dyn Fn(&EstimatorMetrics) -> f64| {
            metrics.iter().map(|m| f(m)).sum::<f64>() / metrics.len() as f64
        };
        Self {
            wind_mean: avg(&|m| m.wind.mean),
            wind_abs_mean: avg(&|m| m.wind.mean.abs()),
            wind_std: avg(&|m| m.wind.std),
            cp_mean: avg(&|m| m.cp.mean),
            cp_abs_mean: avg(&|m| m.cp.mean.abs()),
            cp_std: avg(&|m| m.cp.std),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub imm: AggregateStats,
    pub kf: AggregateStats,
    /// Seeds that completed.
    pub seeds: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// Sorted by seed.
    pub seeds: Vec<SeedResult>,
    /// `None` when every seed failed.
    pub aggregate: Option<Aggregate>,
}

impl ExperimentReport {
    pub fn failures(&self) -> impl Iterator<Item = (u64, &SeedFailure)> {
        self.seeds
            .iter()
            .filter_map(|s| s.outcome.as_ref().err().map(|e| (s.seed, e)))
    }

    pub fn completed(&self) -> impl Iterator<Item = (u64, &SeedRun)> {
        self.seeds
            .iter()
            .filter_map(|s| s.outcome.as_ref().ok().map(|r| (s.seed, r)))
    }
}

/// Seed-averaged statistics; independent of the order of `runs`.
pub fn aggregate<'a>(runs: impl IntoIterator<Item = &'a RunMetrics>) -> Option<Aggregate> {
    let runs: Vec<&RunMetrics> = runs.into_iter().collect();
    if runs.is_empty() {
        return None;
    }
    let imm: Vec<_> = runs.iter().map(|r| &r.imm).collect();
    let kf: Vec<_> = runs.iter().map(|r| &r.kf).collect();
    Some(Aggregate {
        imm: AggregateStats::of(&imm),
        kf: AggregateStats::of(&kf),
        seeds: runs.len(),
    })
}

fn settle_steps(config: &ExperimentConfig) -> usize {
    (config.settle_time / config.sample_time).round() as usize
}

/// Scores one trace after the settle window.
pub fn score(trace: &SeedTrace, config: &ExperimentConfig) -> RunMetrics {
    let skip = settle_steps(config);
    let dt = config.sample_time;
    let rews = trace.rews();
    let cp_true = trace.cp_true();
    let wind_imm = wind_error_series(&trace.imm.wind, &rews).skip(skip);
    let wind_kf = wind_error_series(&trace.kf.wind, &rews).skip(skip);
    let cp_imm = cp_error_series(&trace.imm.cp, &cp_true, dt).skip(skip);
    let cp_kf = cp_error_series(&trace.kf.cp, &cp_true, dt).skip(skip);
    let bins = config.histogram_bins;
    RunMetrics {
        imm: EstimatorMetrics {
            wind: SummaryStats::of(&wind_imm),
            cp: SummaryStats::of(&cp_imm),
        },
        kf: EstimatorMetrics {
            wind: SummaryStats::of(&wind_kf),
            cp: SummaryStats::of(&cp_kf),
        },
        wind_histogram: PairedHistogram::pooled(&wind_imm.scored(), &wind_kf.scored(), bins),
        cp_histogram: PairedHistogram::pooled(&cp_imm.scored(), &cp_kf.scored(), bins),
        settle_time: skip as f64 * dt,
    }
}

/// Initial estimate shared by every filter.
pub fn initial_state(config: &ExperimentConfig, first_measurement: f64) -> EstimatorState {
    let guess = config.wind_guess.unwrap_or(config.mean_wind);
    EstimatorState::new(
        Vector2::new(first_measurement, guess),
        Matrix2::new(
            config.initial_std_omega.powi(2),
            0.0,
            0.0,
            config.initial_std_wind.powi(2),
        ),
    )
}

pub fn filter_noise(config: &ExperimentConfig) -> NoiseModel {
    NoiseModel::from_stds(
        config.process_noise_omega,
        config.wind_step_std,
        config.filter_measurement_std,
    )
}

/// The IMM bank described by `config`, started at `state`.
pub fn build_bank(
    config: &ExperimentConfig,
    state: EstimatorState,
) -> Result<ModeBank<TurbineModel>, ConfigError> {
    let nominal = TurbineModel::new(config.turbine(), config.nominal_surface()?);
    let noise = filter_noise(config);
    let slots = config
        .mode_offsets()
        .into_iter()
        .map(|offset| FilterSlot::new(nominal.with_cp_offset(offset), noise, state))
        .collect();
    Ok(ModeBank::new(
        slots,
        config.initial_mode_probs.clone(),
        config.transition_matrix()?,
    )?)
}

/// The true `Cp` deviation schedule for `seed`.
pub fn schedule_for(config: &ExperimentConfig, seed: u64) -> TrueCpSchedule {
    let dwell = (config.regime_dwell / config.sample_time).round() as usize;
    generate_cp_schedule(
        config.schedule,
        config.schedule_bound,
        config.samples(),
        seed,
        dwell,
    )
}

/// Simulates the plant for `seed` and runs both estimators over it.
///
/// Sample `k ≥ 1` is processed as `step(yₖ, uₖ₋₁)`: the prediction uses the
/// input applied over the preceding interval. `Cp` estimates at `k` use the
/// pitch `uₖ`, matching the truth record.
pub fn trace_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedTrace, SeedFailure> {
    let fail = |stage| {
        move |e: &dyn std::fmt::Display| SeedFailure {
            stage,
            message: e.to_string(),
        }
    };
    let setup = config.plant_setup().map_err(|e| fail("setup")(&e))?;
    let schedule = schedule_for(config, seed);
    let plant =
        simulate_plant(&config.preset(seed), &schedule, &setup).map_err(|e| fail("plant")(&e))?;
    let n = plant.len();
    let Some(first) = plant.records.first() else {
        return Err(SeedFailure {
            stage: "plant",
            message: "empty trajectory".into(),
        });
    };

    let x0 = initial_state(config, first.measurement);
    let mut bank = build_bank(config, x0).map_err(|e| fail("setup")(&e))?;
    let nominal = TurbineModel::new(config.turbine(), setup.nominal.clone());
    let mut kf = ExtendedKalmanFilter::new(nominal, filter_noise(config), x0);

    let mut imm = EstimateTrace {
        wind: Vec::with_capacity(n),
        cp: Vec::with_capacity(n),
    };
    let mut single = imm.clone();
    let mut mode_probabilities = Vec::with_capacity(n);

    for k in 0..n {
        let (imm_x, mu) = if k == 0 {
            (x0.x, bank.mode_probabilities().to_vec())
        } else {
            let y = plant.records[k].measurement;
            let u = plant.records[k - 1].input();
            let out = bank.step(y, &u).map_err(|e| fail("imm")(&e))?;
            kf.step(y, &u).map_err(|e| fail("kf")(&e))?;
            (out.state.x, out.mode_probabilities)
        };
        let u = plant.records[k].input();
        let kf_x = kf.state.x;
        imm.wind.push(imm_x[1]);
        imm.cp
            .push(bank.estimate_cp(&imm_x, &u).unwrap_or(f64::NAN));
        single.wind.push(kf_x[1]);
        single
            .cp
            .push(kf.model.power_coefficient(&kf_x, &u).unwrap_or(f64::NAN));
        mode_probabilities.push(mu);
    }

    Ok(SeedTrace {
        plant,
        schedule,
        imm,
        kf: single,
        mode_probabilities,
    })
}

pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedRun, SeedFailure> {
    let trace = trace_seed(config, seed)?;
    let metrics = score(&trace, config);
    Ok(SeedRun { metrics, trace })
}

/// Runs every configured seed in parallel. A failing seed is reported and
/// the others continue.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ConfigError> {
    config.validate()?;
    let mut seeds: Vec<u64> = config.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let seeds: Vec<SeedResult> = seeds
        .par_iter()
        .map(|&seed| SeedResult {
            seed,
            outcome: run_seed(config, seed),
        })
        .collect();
    let aggregate = aggregate(
        seeds
            .iter()
            .filter_map(|s| s.outcome.as_ref().ok().map(|r| &r.metrics)),
    );
    Ok(ExperimentReport {
        config: config.clone(),
        seeds,
        aggregate,
    })
}

/// Time-averaged mode probabilities over `[start, end)` samples.
pub fn average_mode_probabilities(trace: &SeedTrace, start: usize, end: usize) -> Vec<f64> {
    let rows = &trace.mode_probabilities[start..end];
    let m = rows.first().map_or(0, Vec::len);
    (0..m)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
        .collect()
}
