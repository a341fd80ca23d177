//! Fixtures shared by the criterion benches.

use rews_core::harness::experiment::{build_bank, filter_noise, initial_state, schedule_for};
use rews_core::harness::ExperimentConfig;
use rews_core::plant::{simulate_plant, PlantTrajectory};
use rews_core::{ControlInput, ExtendedKalmanFilter, ModeBank, TurbineModel};

/// A simulated run plus freshly initialised estimators.
pub struct Fixture {
    pub config: ExperimentConfig,
    pub trajectory: PlantTrajectory,
}

impl Fixture {
    /// Above-rated scenario of `duration` seconds for seed 1.
    pub fn above_rated(duration: f64) -> Self {
        let config = ExperimentConfig {
            mean_wind: 15.0,
            duration,
            ..ExperimentConfig::default()
        }
        .effective();
        let schedule = schedule_for(&config, 1);
        let setup = config.plant_setup().expect("default config is valid");
        let trajectory =
            simulate_plant(&config.preset(1), &schedule, &setup).expect("plant simulation");
        Self { config, trajectory }
    }

    /// Measurement/input pairs in the order the estimators consume them.
    pub fn steps(&self) -> Vec<(f64, ControlInput)> {
        self.trajectory
            .records
            .windows(2)
            .map(|w| (w[1].measurement, w[0].input()))
            .collect()
    }

    fn first_measurement(&self) -> f64 {
        self.trajectory.records[0].measurement
    }

    pub fn kf(&self) -> ExtendedKalmanFilter<TurbineModel> {
        let model = TurbineModel::new(
            self.config.turbine(),
            self.config.nominal_surface().expect("analytic surface"),
        );
        ExtendedKalmanFilter::new(
            model,
            filter_noise(&self.config),
            initial_state(&self.config, self.first_measurement()),
        )
    }

    pub fn bank(&self) -> ModeBank<TurbineModel> {
        build_bank(
            &self.config,
            initial_state(&self.config, self.first_measurement()),
        )
        .expect("default bank")
    }
}
