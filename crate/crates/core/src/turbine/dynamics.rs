use nalgebra::{Matrix2, RowVector2, Vector2};

use super::cp::CpSurface;
use super::params::{ControlInput, StateVector, TurbineParameters, OMEGA_FLOOR, WIND_FLOOR};
use crate::ekf::StateModel;
use crate::error::DomainError;

/// `λ = ωR/v`.
pub fn tip_speed_ratio(omega: f64, wind: f64, rotor_radius: f64) -> Result<f64, DomainError> {
    DomainError::check("wind speed", wind, WIND_FLOOR)?;
    Ok(omega * rotor_radius / wind)
}

fn check_state(x: StateVector) -> Result<(), DomainError> {
    DomainError::check("rotor speed", x.omega, OMEGA_FLOOR)?;
    DomainError::check("wind speed", x.wind, WIND_FLOOR)
}

/// Aerodynamic rotor torque `½ρπR²·Cp(λ, θ)·v³/ω` (N·m).
pub fn aero_torque(
    omega: f64,
    wind: f64,
    pitch: f64,
    params: &TurbineParameters,
    cp: &CpSurface,
) -> Result<f64, DomainError> {
    check_state(StateVector::new(omega, wind))?;
    let lambda = omega * params.rotor_radius / wind;
    Ok(params.torque_constant() * cp.value(lambda, pitch) * wind.powi(3) / omega)
}

/// One forward-Euler step of the drivetrain; wind passes through unchanged.
pub fn step_dynamics(
    x: StateVector,
    u: ControlInput,
    params: &TurbineParameters,
    cp: &CpSurface,
) -> Result<StateVector, DomainError> {
    let torque = aero_torque(x.omega, x.wind, u.pitch, params, cp)?;
    let omega = x.omega + params.sample_time / params.inertia * (torque - u.generator_torque);
    if !omega.is_finite() {
        // flooring would silently turn NaN into the floor value
        return Err(DomainError {
            quantity: "rotor speed",
            value: omega,
            floor: OMEGA_FLOOR,
        });
    }
    Ok(StateVector::new(omega, x.wind).floored())
}

/// Partial derivatives `(∂τa/∂ω, ∂τa/∂v)` of the aerodynamic torque.
///
/// The value of `Cp` is the clamped one, the `λ`-slope is taken before
/// clamping, matching [`CpSurface::partials`].
pub fn aero_torque_partials(
    x: StateVector,
    pitch: f64,
    params: &TurbineParameters,
    cp: &CpSurface,
) -> Result<(f64, f64), DomainError> {
    check_state(x)?;
    let k = params.torque_constant();
    let r = params.rotor_radius;
    let (omega, v) = (x.omega, x.wind);
    let lambda = omega * r / v;
    let cp_value = cp.value(lambda, pitch);
    let (dcp_dlambda, _) = cp.partials(lambda, pitch);
    let d_omega =
        k * v.powi(3) / omega * dcp_dlambda * (r / v) - k * cp_value * v.powi(3) / (omega * omega);
    let d_wind = 3.0 * k * cp_value * v * v / omega - k * r * v * dcp_dlambda;
    Ok((d_omega, d_wind))
}

/// `∂f/∂x` of [`step_dynamics`].
pub fn jacobian_f(
    x: StateVector,
    u: ControlInput,
    params: &TurbineParameters,
    cp: &CpSurface,
) -> Result<Matrix2<f64>, DomainError> {
    let (d_omega, d_wind) = aero_torque_partials(x, u.pitch, params, cp)?;
    let gain = params.sample_time / params.inertia;
    Ok(Matrix2::new(1.0 + gain * d_omega, gain * d_wind, 0.0, 1.0))
}

/// Measured output: rotor speed.
pub fn measure(x: StateVector) -> f64 {
    x.omega
}

/// Measurement Jacobian `H = [1, 0]`.
pub fn measurement_jacobian() -> RowVector2<f64> {
    RowVector2::new(1.0, 0.0)
}

/// Drivetrain model with a specific `Cp` surface, usable as a filter model.
#[derive(Clone, Debug, PartialEq)]
pub struct TurbineModel {
    pub params: TurbineParameters,
    pub cp: CpSurface,
}

impl TurbineModel {
    pub fn new(params: TurbineParameters, cp: CpSurface) -> Self {
        Self { params, cp }
    }

    /// Same parameters, surface shifted by `offset`.
    pub fn with_cp_offset(&self, offset: f64) -> Self {
        Self {
            params: self.params,
            cp: self.cp.with_offset(offset),
        }
    }
}

fn to_state(x: &Vector2<f64>) -> StateVector {
    StateVector::new(x[0], x[1])
}

impl StateModel for TurbineModel {
    type Input = ControlInput;

    fn transition(&self, x: &Vector2<f64>, u: &ControlInput) -> Result<Vector2<f64>, DomainError> {
        let next = step_dynamics(to_state(x), *u, &self.params, &self.cp)?;
        Ok(Vector2::new(next.omega, next.wind))
    }

    fn transition_jacobian(
        &self,
        x: &Vector2<f64>,
        u: &ControlInput,
    ) -> Result<Matrix2<f64>, DomainError> {
        jacobian_f(to_state(x), *u, &self.params, &self.cp)
    }

    fn observe(&self, x: &Vector2<f64>, _u: &ControlInput) -> f64 {
        measure(to_state(x))
    }

    fn observation_jacobian(&self, _x: &Vector2<f64>, _u: &ControlInput) -> RowVector2<f64> {
        measurement_jacobian()
    }

    fn power_coefficient(&self, x: &Vector2<f64>, u: &ControlInput) -> Option<f64> {
        let state = to_state(x).floored();
        let lambda = state.omega * self.params.rotor_radius / state.wind;
        Some(self.cp.value(lambda, u.pitch))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turbine::cp::{CpGrid, CpSurface};

    fn constant_surface(value: f64) -> CpSurface {
        CpSurface::from_grid(CpGrid::new(vec![0.0, 100.0], vec![0.0, 1.0], vec![value; 4]).unwrap())
    }

    fn params() -> TurbineParameters {
        TurbineParameters::default()
    }

    #[test]
    fn tip_speed_ratio_examples() {
        assert_eq!(tip_speed_ratio(1.0, 10.0, 10.0).unwrap(), 1.0);
        assert_eq!(tip_speed_ratio(1.0, 20.0, 10.0).unwrap(), 0.5);
        assert_eq!(tip_speed_ratio(0.0, 10.0, 10.0).unwrap(), 0.0);
        let err = tip_speed_ratio(1.0, 0.1, 10.0).unwrap_err();
        assert_eq!(err.quantity, "wind speed");
    }

    #[test]
    fn aero_torque_closed_form() {
        let p = TurbineParameters {
            rotor_radius: 50.0,
            air_density: 1.225,
            ..params()
        };
        let torque = aero_torque(1.0, 8.0, 0.0, &p, &constant_surface(0.48)).unwrap();
        let expected = 0.5 * 1.225 * std::f64::consts::PI * 2500.0 * 0.48 * 512.0;
        assert!((torque - expected).abs() < 1e-9 * expected);
        assert!((torque - 1.1822e6).abs() < 1e2);
    }

    #[test]
    fn aero_torque_zero_cp_and_cubic_scaling() {
        let p = params();
        assert_eq!(
            aero_torque(0.8, 9.0, 0.0, &p, &constant_surface(0.0)).unwrap(),
            0.0
        );
        let s = constant_surface(0.4);
        let t1 = aero_torque(0.8, 5.0, 0.0, &p, &s).unwrap();
        let t2 = aero_torque(0.8, 10.0, 0.0, &p, &s).unwrap();
        assert!((t2 / t1 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn aero_torque_rejects_floor_violations() {
        let s = constant_surface(0.4);
        assert_eq!(
            aero_torque(0.01, 8.0, 0.0, &params(), &s)
                .unwrap_err()
                .quantity,
            "rotor speed"
        );
        assert_eq!(
            aero_torque(0.8, 0.2, 0.0, &params(), &s)
                .unwrap_err()
                .quantity,
            "wind speed"
        );
    }

    #[test]
    fn euler_step_examples() {
        let p = params();
        let s = CpSurface::analytic();
        let x = StateVector::new(0.9, 8.0);
        let ta = aero_torque(0.9, 8.0, 0.0, &p, &s).unwrap();
        let next = step_dynamics(x, ControlInput::new(0.0, ta), &p, &s).unwrap();
        assert_eq!(next.omega, 0.9);
        assert_eq!(next.wind, 8.0);

        // net torque of +1.6e6 N·m over 0.05 s on J = 1.6e8
        let next = step_dynamics(x, ControlInput::new(0.0, ta - 1.6e6), &p, &s).unwrap();
        assert!((next.omega - 0.9005).abs() < 1e-12);
    }

    #[test]
    fn jacobian_without_coupling_is_identity() {
        let f = jacobian_f(
            StateVector::new(0.7, 9.0),
            ControlInput::new(0.0, 1e6),
            &params(),
            &constant_surface(0.0),
        )
        .unwrap();
        assert_eq!(f, Matrix2::identity());
    }

    #[test]
    fn measurement_is_projection() {
        assert_eq!(measure(StateVector::new(0.9, 8.0)), 0.9);
        assert_eq!(measure(StateVector::new(0.0, 15.0)), 0.0);
        assert_eq!(measurement_jacobian(), RowVector2::new(1.0, 0.0));
    }
}
