use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::stream;
use crate::error::SimulationError;
use crate::turbine::WIND_FLOOR;

/// Number of point measurements across the rotor (uniform 3×3 layout).
pub const GRID_POINTS: usize = 9;

/// Share of each point's variance carried by the rotor-wide slow component.
pub const SHARED_VARIANCE_FRACTION: f64 = 0.6;
/// Corner frequency (Hz) of the rotor-wide component.
pub const SHARED_CORNER_HZ: f64 = 0.05;
/// Corner frequency (Hz) of the per-point component.
pub const POINT_CORNER_HZ: f64 = 0.5;

/// Mean wind, turbulence intensity and duration of one simulated case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPreset {
    /// Mean wind speed (m/s).
    pub mean_wind: f64,
    /// Turbulence intensity (std / mean).
    pub turbulence_intensity: f64,
    /// Duration (s).
    pub duration: f64,
    pub seed: u64,
}

impl ScenarioPreset {
    pub fn below_rated(seed: u64) -> Self {
        Self {
            mean_wind: 8.0,
            turbulence_intensity: 0.1,
            duration: 600.0,
            seed,
        }
    }

    pub fn above_rated(seed: u64) -> Self {
        Self {
            mean_wind: 15.0,
            ..Self::below_rated(seed)
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if !(self.mean_wind > 0.0 && self.mean_wind.is_finite()) {
            return Err(SimulationError::InvalidScenario(format!(
                "mean wind must be positive, got {}",
                self.mean_wind
            )));
        }
        if !(0.0..=0.5).contains(&self.turbulence_intensity) {
            return Err(SimulationError::InvalidScenario(format!(
                "turbulence intensity must lie in [0, 0.5], got {}",
                self.turbulence_intensity
            )));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(SimulationError::InvalidScenario(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(())
    }

    /// Number of samples at `sample_time`, one per step starting at `t = 0`.
    pub fn samples(&self, sample_time: f64) -> usize {
        (self.duration / sample_time).round() as usize
    }
}

/// Nine point-wind series and their rotor-effective average.
#[derive(Clone, Debug, PartialEq)]
pub struct WindField {
    pub points: Vec<Vec<f64>>,
    pub rews: Vec<f64>,
    pub sample_time: f64,
    pub seed: u64,
}

/// Stationary first-order low-pass noise with standard deviation `std`.
fn shaped_noise(rng: &mut impl Rng, len: usize, corner_hz: f64, std: f64, dt: f64) -> Vec<f64> {
    let a = (-2.0 * std::f64::consts::PI * corner_hz * dt).exp();
    let drive = std * (1.0 - a * a).sqrt();
    let mut x = std * rng.sample::<f64, _>(StandardNormal);
    (0..len)
        .map(|_| {
            let current = x;
            x = a * x + drive * rng.sample::<f64, _>(StandardNormal);
            current
        })
        .collect()
}

/// Arithmetic mean of the point series at every step.
pub fn rotor_average(points: &[Vec<f64>]) -> Vec<f64> {
    let len = points.first().map_or(0, Vec::len);
    (0..len)
        .map(|k| points.iter().map(|p| p[k]).sum::<f64>() / points.len() as f64)
        .collect()
}

/// Seeded turbulent wind over the 3×3 rotor grid.
///
/// Each point is `v_op + shared + own`, where the shared slow component and
/// the independent fast components are first-order shaped white noise, scaled
/// so every point has standard deviation `TI·v_op`.
pub fn generate_wind(
    preset: &ScenarioPreset,
    sample_time: f64,
) -> Result<WindField, SimulationError> {
    preset.validate()?;
    let len = preset.samples(sample_time);
    let sigma = preset.turbulence_intensity * preset.mean_wind;
    let shared_std = sigma * SHARED_VARIANCE_FRACTION.sqrt();
    let point_std = sigma * (1.0 - SHARED_VARIANCE_FRACTION).sqrt();

    let mut rng = stream(preset.seed, 0);
    let shared = shaped_noise(&mut rng, len, SHARED_CORNER_HZ, shared_std, sample_time);
    let points: Vec<Vec<f64>> = (0..GRID_POINTS)
        .map(|i| {
            let mut rng = stream(preset.seed, 1 + i as u64);
            let own = shaped_noise(&mut rng, len, POINT_CORNER_HZ, point_std, sample_time);
            shared
                .iter()
                .zip(own)
                .map(|(s, o)| (preset.mean_wind + s + o).max(WIND_FLOOR))
                .collect()
        })
        .collect();
    let rews = rotor_average(&points);
    Ok(WindField {
        points,
        rews,
        sample_time,
        seed: preset.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_turbulence_gives_constant_wind() {
        let preset = ScenarioPreset {
            turbulence_intensity: 0.0,
            duration: 20.0,
            ..ScenarioPreset::below_rated(3)
        };
        let field = generate_wind(&preset, 0.05).unwrap();
        assert_eq!(field.points.len(), GRID_POINTS);
        assert!(field.rews.iter().all(|&v| v == 8.0));
        assert!(field.points.iter().flatten().all(|&v| v == 8.0));
    }

    #[test]
    fn rews_is_the_point_mean() {
        let field = generate_wind(&ScenarioPreset::above_rated(11), 0.05).unwrap();
        assert_eq!(field.rews.len(), 12000);
        for k in (0..field.rews.len()).step_by(97) {
            let mean = field.points.iter().map(|p| p[k]).sum::<f64>() / 9.0;
            assert_eq!(field.rews[k], mean);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_wind(&ScenarioPreset::below_rated(5), 0.05).unwrap();
        let b = generate_wind(&ScenarioPreset::below_rated(5), 0.05).unwrap();
        let c = generate_wind(&ScenarioPreset::below_rated(6), 0.05).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.rews, c.rews);
    }

    #[test]
    fn rejects_bad_presets() {
        let bad = ScenarioPreset {
            turbulence_intensity: 0.7,
            ..ScenarioPreset::below_rated(0)
        };
        assert!(generate_wind(&bad, 0.05).is_err());
        let bad = ScenarioPreset {
            mean_wind: -1.0,
            ..ScenarioPreset::below_rated(0)
        };
        assert!(bad.validate().is_err());
    }
}
