use serde::{Deserialize, Serialize};

use crate::turbine::{aero_torque, ControlInput, CpSurface, TurbineParameters, WIND_FLOOR};

/// Pitch regulator tuning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSettings {
    /// Fine pitch (rad), used below rated.
    pub fine_pitch: f64,
    /// Upper pitch limit (rad).
    pub max_pitch: f64,
    /// Closed-loop natural frequency of the speed loop (Hz).
    pub bandwidth_hz: f64,
    pub damping_ratio: f64,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        Self {
            fine_pitch: 0.0,
            max_pitch: 30f64.to_radians(),
            bandwidth_hz: 0.05,
            damping_ratio: 0.7,
        }
    }
}

const SCHEDULE_STEP_DEG: f64 = 1.0;

/// Wind speed at which the rotor at rated speed and `pitch` produces `torque`.
fn wind_for_torque(
    torque: f64,
    pitch: f64,
    params: &TurbineParameters,
    surface: &CpSurface,
) -> Option<f64> {
    let f = |v: f64| {
        aero_torque(params.rated_speed, v, pitch, params, surface)
            .ok()
            .map(|t| t - torque)
    };
    let (mut lo, mut hi) = (WIND_FLOOR.max(3.0), 40.0);
    if f(lo)? > 0.0 || f(hi)? < 0.0 {
        return None;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Variable-speed, pitch-regulated baseline controller.
///
/// Below rated: `τg = K·ω²` with `K = ½ρπR⁵·Cp,max/λ*³` at fine pitch.
/// Above rated: `τg = τrated` and a PI loop on `ω − ωrated` drives pitch,
/// its gains scheduled on pitch from the aerodynamic pitch sensitivity along
/// the rated-torque operating line. The integrator is clamped to the pitch
/// limits.
#[derive(Clone, Debug)]
pub struct BaselineController {
    params: TurbineParameters,
    settings: ControllerSettings,
    optimal_gain: f64,
    optimal_tsr: f64,
    /// `(pitch, kp, ki)` knots, pitch ascending.
    schedule: Vec<(f64, f64, f64)>,
    integrator: f64,
    pitch: f64,
}

impl BaselineController {
    pub fn new(
        params: TurbineParameters,
        settings: ControllerSettings,
        nominal: &CpSurface,
    ) -> Self {
        let (optimal_tsr, cp_max) = nominal.optimum(settings.fine_pitch);
        let optimal_gain =
            params.torque_constant() * params.rotor_radius.powi(3) * cp_max / optimal_tsr.powi(3);

        let natural = 2.0 * std::f64::consts::PI * settings.bandwidth_hz;
        let mut schedule = Vec::new();
        let mut pitch = settings.fine_pitch;
        while pitch <= settings.max_pitch + 1e-12 {
            if let Some(v) = wind_for_torque(params.rated_torque, pitch, &params, nominal) {
                let lambda = params.rated_speed * params.rotor_radius / v;
                let (_, dcp_dpitch) = nominal.partials(lambda, pitch);
                let sensitivity =
                    -params.torque_constant() * dcp_dpitch * v.powi(3) / params.rated_speed;
                if sensitivity > 0.0 {
                    let kp = 2.0 * settings.damping_ratio * natural * params.inertia / sensitivity;
                    let ki = natural * natural * params.inertia / sensitivity;
                    schedule.push((pitch, kp, ki));
                }
            }
            pitch += SCHEDULE_STEP_DEG.to_radians();
        }
        if schedule.is_empty() {
            // no usable sensitivity on the nominal surface; fall back to a slow loop
            schedule.push((settings.fine_pitch, 0.1, 0.01));
        }

        Self {
            params,
            settings,
            optimal_gain,
            optimal_tsr,
            schedule,
            integrator: settings.fine_pitch,
            pitch: settings.fine_pitch,
        }
    }

    /// `K` of the below-rated torque law.
    pub fn optimal_gain(&self) -> f64 {
        self.optimal_gain
    }

    /// Tip-speed ratio the below-rated law tracks.
    pub fn optimal_tsr(&self) -> f64 {
        self.optimal_tsr
    }

    pub fn settings(&self) -> &ControllerSettings {
        &self.settings
    }

    /// PI gains at `pitch`, linearly interpolated in the schedule.
    pub fn gains(&self, pitch: f64) -> (f64, f64) {
        let s = &self.schedule;
        if pitch <= s[0].0 {
            return (s[0].1, s[0].2);
        }
        for w in s.windows(2) {
            let (a, b) = (w[0], w[1]);
            if pitch <= b.0 {
                let t = (pitch - a.0) / (b.0 - a.0);
                return (a.1 + t * (b.1 - a.1), a.2 + t * (b.2 - a.2));
            }
        }
        let last = s[s.len() - 1];
        (last.1, last.2)
    }

    /// Starts the loop at `pitch` without a bump.
    pub fn reset(&mut self, pitch: f64) {
        let p = pitch.clamp(self.settings.fine_pitch, self.settings.max_pitch);
        self.integrator = p;
        self.pitch = p;
    }

    fn above_rated(&self) -> bool {
        self.pitch > self.settings.fine_pitch + 1e-4
    }

    /// Commands for the next sample given the measured rotor speed.
    pub fn command(&mut self, omega: f64) -> ControlInput {
        let omega = omega.max(0.0);
        let error = omega - self.params.rated_speed;
        let (kp, ki) = self.gains(self.pitch);
        let (lo, hi) = (self.settings.fine_pitch, self.settings.max_pitch);
        self.integrator = (self.integrator + ki * error * self.params.sample_time).clamp(lo, hi);
        self.pitch = (kp * error + self.integrator).clamp(lo, hi);

        let torque = if self.above_rated() {
            self.params.rated_torque
        } else {
            (self.optimal_gain * omega * omega).min(self.params.rated_torque)
        };
        ControlInput::new(
            self.pitch,
            torque.clamp(0.0, 1.2 * self.params.rated_torque),
        )
    }
}

/// Steady operating point `(ω, θ)` of the closed loop in constant wind.
pub fn operating_point(
    wind: f64,
    params: &TurbineParameters,
    controller: &BaselineController,
    nominal: &CpSurface,
) -> (f64, f64) {
    let fine = controller.settings.fine_pitch;
    let omega = controller.optimal_tsr * wind / params.rotor_radius;
    if omega < params.rated_speed {
        return (omega, fine);
    }
    let omega = params.rated_speed;
    let torque_at = |pitch: f64| {
        aero_torque(omega, wind.max(WIND_FLOOR), pitch, params, nominal).unwrap_or(0.0)
    };
    let target = params.rated_torque;
    let (mut lo, mut hi) = (fine, controller.settings.max_pitch);
    if torque_at(lo) <= target {
        return (omega, fine);
    }
    if torque_at(hi) >= target {
        return (omega, hi);
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if torque_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (omega, 0.5 * (lo + hi))
}
