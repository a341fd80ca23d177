use serde::{Deserialize, Serialize};

use crate::error::ParameterError;

/// Rotor speed floor (rad/s) guarding the `1/ω` singularity of the aerodynamic torque.
pub const OMEGA_FLOOR: f64 = 0.05;
/// Wind speed floor (m/s) guarding the `1/v` singularity of the tip-speed ratio.
pub const WIND_FLOOR: f64 = 0.5;
/// Largest sample time the explicit drivetrain integrator is allowed to run with.
pub const MAX_SAMPLE_TIME: f64 = 0.1;

/// Physical constants shared by the plant simulator and every filter.
///
/// Defaults are public DTU 10 MW reference-turbine figures (rotor radius,
/// drivetrain inertia referred to the low-speed shaft, rated rotor speed) and
/// a rated low-speed-shaft torque giving roughly 10 MW of mechanical power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TurbineParameters {
    /// Drivetrain inertia (kg·m²).
    pub inertia: f64,
    /// Rotor radius (m), used both in the tip-speed ratio and the swept area.
    pub rotor_radius: f64,
    /// Air density (kg/m³).
    pub air_density: f64,
    /// Rated rotor speed (rad/s).
    pub rated_speed: f64,
    /// Rated generator torque on the rotor side (N·m).
    pub rated_torque: f64,
    /// Sample time (s).
    pub sample_time: f64,
    /// Standard deviation of the wind random-walk increment (m/s per step).
    pub wind_step_std: f64,
}

impl Default for TurbineParameters {
    fn default() -> Self {
        Self {
            inertia: 1.6e8,
            rotor_radius: 89.2,
            air_density: 1.225,
            rated_speed: 1.005,
            rated_torque: 1.0e7,
            sample_time: 0.05,
            wind_step_std: 0.1,
        }
    }
}

impl TurbineParameters {
    pub fn validate(&self) -> Result<(), ParameterError> {
        let fields = [
            ("inertia", self.inertia),
            ("rotor_radius", self.rotor_radius),
            ("air_density", self.air_density),
            ("rated_speed", self.rated_speed),
            ("rated_torque", self.rated_torque),
            ("sample_time", self.sample_time),
            ("wind_step_std", self.wind_step_std),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParameterError::NotPositive { name, value });
            }
        }
        if self.sample_time > MAX_SAMPLE_TIME {
            return Err(ParameterError::SampleTimeTooLarge {
                value: self.sample_time,
                max: MAX_SAMPLE_TIME,
            });
        }
        Ok(())
    }

    /// `½ρπR²`, the constant in front of `Cp·v³/ω`.
    pub fn torque_constant(&self) -> f64 {
        0.5 * self.air_density * std::f64::consts::PI * self.rotor_radius.powi(2)
    }
}

/// Drivetrain state `[ω, v]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector {
    /// Rotor speed (rad/s).
    pub omega: f64,
    /// Rotor-effective wind speed (m/s).
    pub wind: f64,
}

impl StateVector {
    pub fn new(omega: f64, wind: f64) -> Self {
        Self { omega, wind }
    }

    /// Copy with both components raised to their floors.
    pub fn floored(self) -> Self {
        Self {
            omega: self.omega.max(OMEGA_FLOOR),
            wind: self.wind.max(WIND_FLOOR),
        }
    }
}

/// Actuator commands applied over one sample.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ControlInput {
    /// Collective pitch angle (rad).
    pub pitch: f64,
    /// Generator torque referred to the rotor side (N·m).
    pub generator_torque: f64,
}

impl ControlInput {
    pub fn new(pitch: f64, generator_torque: f64) -> Self {
        Self {
            pitch,
            generator_torque,
        }
    }
}
