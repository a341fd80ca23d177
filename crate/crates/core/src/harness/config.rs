//! Flat key-value experiment configuration (TOML).
//!
//! Every key is optional; missing keys take the documented defaults and
//! unknown keys are rejected. The echo written next to the outputs is
//! [`ExperimentConfig::effective`] serialized, so reloading it reproduces the
//! run exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::imm::{validate_mode_probabilities, TransitionMatrix};
use crate::plant::{ControllerSettings, PlantSetup, ScenarioPreset, ScheduleKind};
use crate::turbine::{CpGrid, CpSurface, TurbineParameters};

/// Operating region presets with their mean wind speeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Below,
    Above,
}

impl Region {
    pub fn mean_wind(self) -> f64 {
        match self {
            Region::Below => 8.0,
            Region::Above => 15.0,
        }
    }
}

impl std::str::FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "below" => Ok(Self::Below),
            "above" => Ok(Self::Above),
            other => Err(format!(
                "unknown scenario '{other}', expected below or above"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    // scenario
    /// Mean wind speed (m/s).
    pub mean_wind: f64,
    pub turbulence_intensity: f64,
    /// Run length (s).
    pub duration: f64,
    pub seeds: Vec<u64>,

    // turbine
    pub inertia: f64,
    pub rotor_radius: f64,
    pub air_density: f64,
    pub rated_speed: f64,
    pub rated_torque: f64,
    pub sample_time: f64,
    /// Wind random-walk increment std used by the filters (m/s per step).
    pub wind_step_std: f64,
    /// Optional `Cp` table (CSV); the analytic surrogate is used otherwise.
    pub cp_table: Option<PathBuf>,

    // controller
    pub fine_pitch: f64,
    pub max_pitch: f64,
    pub pitch_bandwidth_hz: f64,
    pub pitch_damping_ratio: f64,

    // plant
    /// Rotor speed sensor noise std (rad/s).
    pub measurement_noise_std: f64,
    pub schedule: ScheduleKind,
    /// Bound of the true `Cp` deviation.
    pub schedule_bound: f64,
    /// Regime dwell time (s).
    pub regime_dwell: f64,

    // estimators
    /// Offset `ΔCp` of modes 2 and 3.
    pub delta_cp: f64,
    pub transition: Vec<Vec<f64>>,
    pub initial_mode_probs: Vec<f64>,
    /// Rotor speed process noise std (rad/s per step).
    pub process_noise_omega: f64,
    /// Measurement noise std assumed by the filters (rad/s).
    pub filter_measurement_std: f64,
    pub initial_std_omega: f64,
    pub initial_std_wind: f64,
    /// Initial wind estimate; the scenario mean when absent.
    pub wind_guess: Option<f64>,

    // scoring
    /// Initial window excluded from statistics (s).
    pub settle_time: f64,
    pub histogram_bins: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let turbine = TurbineParameters::default();
        let controller = ControllerSettings::default();
        let sensor = 0.005 * turbine.rated_speed;
        Self {
            mean_wind: 8.0,
            turbulence_intensity: 0.1,
            duration: 600.0,
            seeds: vec![1],
            inertia: turbine.inertia,
            rotor_radius: turbine.rotor_radius,
            air_density: turbine.air_density,
            rated_speed: turbine.rated_speed,
            rated_torque: turbine.rated_torque,
            sample_time: turbine.sample_time,
            wind_step_std: turbine.wind_step_std,
            cp_table: None,
            fine_pitch: controller.fine_pitch,
            max_pitch: controller.max_pitch,
            pitch_bandwidth_hz: controller.bandwidth_hz,
            pitch_damping_ratio: controller.damping_ratio,
            measurement_noise_std: sensor,
            schedule: ScheduleKind::Regime,
            schedule_bound: 0.04,
            regime_dwell: 100.0,
            delta_cp: 0.04,
            transition: vec![
                vec![0.99, 0.005, 0.005],
                vec![0.005, 0.99, 0.005],
                vec![0.005, 0.005, 0.99],
            ],
            initial_mode_probs: vec![1.0 / 3.0; 3],
            process_noise_omega: 1e-4,
            filter_measurement_std: sensor,
            initial_std_omega: 0.1,
            initial_std_wind: 2.0,
            wind_guess: None,
            settle_time: 30.0,
            histogram_bins: 41,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Copy with every implicit default spelled out.
    pub fn effective(&self) -> Self {
        Self {
            wind_guess: Some(self.wind_guess.unwrap_or(self.mean_wind)),
            ..self.clone()
        }
    }

    pub fn set_region(&mut self, region: Region) {
        self.mean_wind = region.mean_wind();
    }

    pub fn turbine(&self) -> TurbineParameters {
        TurbineParameters {
            inertia: self.inertia,
            rotor_radius: self.rotor_radius,
            air_density: self.air_density,
            rated_speed: self.rated_speed,
            rated_torque: self.rated_torque,
            sample_time: self.sample_time,
            wind_step_std: self.wind_step_std,
        }
    }

    pub fn controller(&self) -> ControllerSettings {
        ControllerSettings {
            fine_pitch: self.fine_pitch,
            max_pitch: self.max_pitch,
            bandwidth_hz: self.pitch_bandwidth_hz,
            damping_ratio: self.pitch_damping_ratio,
        }
    }

    pub fn preset(&self, seed: u64) -> ScenarioPreset {
        ScenarioPreset {
            mean_wind: self.mean_wind,
            turbulence_intensity: self.turbulence_intensity,
            duration: self.duration,
            seed,
        }
    }

    pub fn transition_matrix(&self) -> Result<TransitionMatrix, ConfigError> {
        Ok(TransitionMatrix::from_rows(&self.transition)?)
    }

    /// `Cp` offsets of the bank: `0, +Δ, −Δ` for three modes.
    pub fn mode_offsets(&self) -> Vec<f64> {
        let pattern = [0.0, self.delta_cp, -self.delta_cp];
        (0..self.transition.len())
            .map(|j| {
                if j < pattern.len() {
                    pattern[j]
                } else {
                    // further modes step outwards: ±2Δ, ±3Δ, ...
                    let level = j.div_ceil(2);
                    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                    sign * self.delta_cp * level as f64
                }
            })
            .collect()
    }

    pub fn nominal_surface(&self) -> Result<CpSurface, ConfigError> {
        match &self.cp_table {
            Some(path) => Ok(CpSurface::from_grid(CpGrid::from_csv_path(path)?)),
            None => Ok(CpSurface::analytic()),
        }
    }

    pub fn plant_setup(&self) -> Result<PlantSetup, ConfigError> {
        Ok(PlantSetup {
            params: self.turbine(),
            controller: self.controller(),
            nominal: self.nominal_surface()?,
            measurement_noise_std: self.measurement_noise_std,
        })
    }

    pub fn samples(&self) -> usize {
        self.preset(0).samples(self.sample_time)
    }

    /// Checks every invariant the runner relies on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.turbine().validate()?;
        self.preset(0)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("at least one seed is required".into()));
        }
        let pi = self.transition_matrix()?;
        if self.initial_mode_probs.len() != pi.modes() {
            return Err(ConfigError::Invalid(format!(
                "initial_mode_probs has {} entries but transition has {} modes",
                self.initial_mode_probs.len(),
                pi.modes()
            )));
        }
        validate_mode_probabilities(&self.initial_mode_probs)?;
        self.nominal_surface()?;
        let non_negative = [
            ("measurement_noise_std", self.measurement_noise_std),
            ("schedule_bound", self.schedule_bound),
            ("delta_cp", self.delta_cp),
            ("process_noise_omega", self.process_noise_omega),
            ("settle_time", self.settle_time),
            ("fine_pitch", self.fine_pitch),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        let positive = [
            ("filter_measurement_std", self.filter_measurement_std),
            ("initial_std_omega", self.initial_std_omega),
            ("initial_std_wind", self.initial_std_wind),
            ("regime_dwell", self.regime_dwell),
            ("pitch_bandwidth_hz", self.pitch_bandwidth_hz),
            ("pitch_damping_ratio", self.pitch_damping_ratio),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        if self.max_pitch < self.fine_pitch {
            return Err(ConfigError::Invalid(format!(
                "max_pitch {} is below fine_pitch {}",
                self.max_pitch, self.fine_pitch
            )));
        }
        if let Some(guess) = self.wind_guess {
            if !(guess.is_finite() && guess > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "wind_guess must be positive, got {guess}"
                )));
            }
        }
        if self.histogram_bins == 0 {
            return Err(ConfigError::Invalid(
                "histogram_bins must be positive".into(),
            ));
        }
        if self.settle_time >= self.duration {
            return Err(ConfigError::Invalid(format!(
                "settle_time {} leaves nothing to score in a {} s run",
                self.settle_time, self.duration
            )));
        }
        self.nominal_surface()?;
        Ok(())
    }
}
