use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use super::controller::{operating_point, BaselineController, ControllerSettings};
use super::schedule::TrueCpSchedule;
use super::stream;
use super::wind::{generate_wind, ScenarioPreset, WindField};
use crate::error::SimulationError;
use crate::turbine::{step_dynamics, ControlInput, CpSurface, StateVector, TurbineParameters};

/// Overspeed limit as a multiple of rated rotor speed.
pub const OVERSPEED_LIMIT: f64 = 1.5;

/// One sample of the simulated plant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantRecord {
    pub time: f64,
    /// True rotor speed (rad/s).
    pub omega: f64,
    /// Rotor-effective wind speed (m/s).
    pub wind: f64,
    /// Pitch applied from this sample to the next (rad).
    pub pitch: f64,
    /// Generator torque applied from this sample to the next (N·m).
    pub generator_torque: f64,
    /// True power coefficient, nominal surface plus the scheduled deviation.
    pub cp: f64,
    /// Noisy rotor speed measurement (rad/s).
    pub measurement: f64,
}

impl PlantRecord {
    pub fn input(&self) -> ControlInput {
        ControlInput::new(self.pitch, self.generator_torque)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantTrajectory {
    pub sample_time: f64,
    pub records: Vec<PlantRecord>,
}

impl PlantTrajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV with header `t,omega,v_rews,pitch,tau_g,cp_true,y_meas`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "t", "omega", "v_rews", "pitch", "tau_g", "cp_true", "y_meas",
        ])?;
        for r in &self.records {
            wtr.write_record(
                [
                    r.time,
                    r.omega,
                    r.wind,
                    r.pitch,
                    r.generator_torque,
                    r.cp,
                    r.measurement,
                ]
                .map(|v| v.to_string()),
            )?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Everything besides the scenario that a plant run needs.
#[derive(Clone, Debug)]
pub struct PlantSetup {
    pub params: TurbineParameters,
    pub controller: ControllerSettings,
    /// Nominal surface; the truth is this surface shifted by the schedule.
    pub nominal: CpSurface,
    /// Standard deviation of the rotor speed sensor (rad/s).
    pub measurement_noise_std: f64,
}

impl PlantSetup {
    pub fn new(params: TurbineParameters, nominal: CpSurface) -> Self {
        Self {
            measurement_noise_std: 0.005 * params.rated_speed,
            params,
            controller: ControllerSettings::default(),
            nominal,
        }
    }
}

/// Closed-loop simulation driven by the scenario's rotor-effective wind.
pub fn simulate_plant(
    preset: &ScenarioPreset,
    schedule: &TrueCpSchedule,
    setup: &PlantSetup,
) -> Result<PlantTrajectory, SimulationError> {
    setup.params.validate()?;
    let wind = generate_wind(preset, setup.params.sample_time)?;
    simulate_with_wind(&wind, schedule, setup)
}

/// Closed-loop simulation over a prepared wind field; measurement noise uses
/// the field's seed.
pub fn simulate_with_wind(
    wind: &WindField,
    schedule: &TrueCpSchedule,
    setup: &PlantSetup,
) -> Result<PlantTrajectory, SimulationError> {
    let params = &setup.params;
    let n = wind.rews.len();
    if schedule.len() < n {
        return Err(SimulationError::ScheduleTooShort {
            schedule: schedule.len(),
            needed: n,
        });
    }
    let mut controller = BaselineController::new(*params, setup.controller, &setup.nominal);
    let Some(&first_wind) = wind.rews.first() else {
        return Ok(PlantTrajectory {
            sample_time: params.sample_time,
            records: Vec::new(),
        });
    };
    let (omega0, pitch0) = operating_point(first_wind, params, &controller, &setup.nominal);
    controller.reset(pitch0);

    let mut noise = stream(wind.seed, 200);
    let limit = OVERSPEED_LIMIT * params.rated_speed;
    let mut omega = omega0;
    let mut records = Vec::with_capacity(n);
    for (k, (&v, &delta)) in wind.rews.iter().zip(&schedule.offsets).enumerate() {
        let time = k as f64 * params.sample_time;
        if !(0.0..=limit).contains(&omega) {
            return Err(SimulationError::RotorSpeedOutOfRange {
                step: k,
                time,
                omega,
                limit,
            });
        }
        let e: f64 = noise.sample(StandardNormal);
        let measurement = omega + setup.measurement_noise_std * e;
        let u = controller.command(measurement);
        let truth = setup.nominal.with_offset(delta);
        let lambda = omega * params.rotor_radius / v;
        records.push(PlantRecord {
            time,
            omega,
            wind: v,
            pitch: u.pitch,
            generator_torque: u.generator_torque,
            cp: truth.value(lambda, u.pitch),
            measurement,
        });
        omega = step_dynamics(StateVector::new(omega, v), u, params, &truth)?.omega;
    }
    Ok(PlantTrajectory {
        sample_time: params.sample_time,
        records,
    })
}
