//! Discrete-time extended Kalman filter for a two-state, single-output model.
//!
//! The recursion follows the usual two phases:
//!
//! ```text
//! predict:  x⁻ = f(x⁺, u)          P⁻ = F P⁺ Fᵀ + Q      (F = ∂f/∂x at x⁺)
//! update:   z  = y − h(x⁻, u)      S  = H P⁻ Hᵀ + R
//!           L  = P⁻ Hᵀ S⁻¹         x⁺ = x⁻ + L z          P⁺ = (I − L H) P⁻
//! ```
//!
//! Covariances are symmetrized after every phase.

use nalgebra::{Matrix2, RowVector2, Vector2};

use crate::error::{DomainError, FilterError};

/// Process model seen by the filter.
pub trait StateModel {
    type Input;

    fn transition(&self, x: &Vector2<f64>, u: &Self::Input) -> Result<Vector2<f64>, DomainError>;

    fn transition_jacobian(
        &self,
        x: &Vector2<f64>,
        u: &Self::Input,
    ) -> Result<Matrix2<f64>, DomainError>;

    fn observe(&self, x: &Vector2<f64>, u: &Self::Input) -> f64;

    fn observation_jacobian(&self, x: &Vector2<f64>, u: &Self::Input) -> RowVector2<f64>;

    /// Power coefficient implied by the model at `x`, if it has one.
    fn power_coefficient(&self, _x: &Vector2<f64>, _u: &Self::Input) -> Option<f64> {
        None
    }
}

/// Estimate and its error covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorState {
    pub x: Vector2<f64>,
    pub p: Matrix2<f64>,
}

impl EstimatorState {
    pub fn new(x: Vector2<f64>, p: Matrix2<f64>) -> Self {
        Self { x, p }
    }
}

/// Process covariance `Q` and scalar measurement variance `R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub q: Matrix2<f64>,
    pub r: f64,
}

impl NoiseModel {
    pub fn new(q: Matrix2<f64>, r: f64) -> Self {
        Self { q, r }
    }

    /// Diagonal `Q` from per-state standard deviations, `R` from a sensor std.
    pub fn from_stds(omega_std: f64, wind_std: f64, measurement_std: f64) -> Self {
        Self {
            q: Matrix2::new(omega_std * omega_std, 0.0, 0.0, wind_std * wind_std),
            r: measurement_std * measurement_std,
        }
    }
}

/// Residual quantities of one measurement update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateReport {
    pub residual: f64,
    pub innovation_cov: f64,
    pub gain: Vector2<f64>,
}

pub(crate) fn symmetrize(p: Matrix2<f64>) -> Matrix2<f64> {
    (p + p.transpose()) * 0.5
}

pub fn predict<M: StateModel>(
    state: &EstimatorState,
    u: &M::Input,
    model: &M,
    noise: &NoiseModel,
) -> Result<EstimatorState, FilterError> {
    let f = model.transition_jacobian(&state.x, u)?;
    let x = model.transition(&state.x, u)?;
    let p = f * state.p * f.transpose() + noise.q;
    Ok(EstimatorState::new(x, symmetrize(p)))
}

pub fn update<M: StateModel>(
    state: &EstimatorState,
    y: f64,
    u: &M::Input,
    model: &M,
    noise: &NoiseModel,
) -> Result<(EstimatorState, UpdateReport), FilterError> {
    let h = model.observation_jacobian(&state.x, u);
    let residual = y - model.observe(&state.x, u);
    let s = (h * state.p * h.transpose())[(0, 0)] + noise.r;
    if !(s > 0.0 && s.is_finite()) {
        return Err(FilterError::NonPositiveInnovation { value: s });
    }
    let gain = state.p * h.transpose() / s;
    let x = state.x + gain * residual;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(FilterError::NonFiniteState { x: [x[0], x[1]] });
    }
    let p = (Matrix2::identity() - gain * h) * state.p;
    Ok((
        EstimatorState::new(x, symmetrize(p)),
        UpdateReport {
            residual,
            innovation_cov: s,
            gain,
        },
    ))
}

/// A single filter owning its model, noise and state.
#[derive(Clone, Debug)]
pub struct ExtendedKalmanFilter<M> {
    pub model: M,
    pub noise: NoiseModel,
    pub state: EstimatorState,
}

impl<M: StateModel> ExtendedKalmanFilter<M> {
    pub fn new(model: M, noise: NoiseModel, state: EstimatorState) -> Self {
        Self {
            model,
            noise,
            state,
        }
    }

    /// Predict with `u`, then update with `y`. On error the state is untouched.
    pub fn step(&mut self, y: f64, u: &M::Input) -> Result<UpdateReport, FilterError> {
        let prior = predict(&self.state, u, &self.model, &self.noise)?;
        let (posterior, report) = update(&prior, y, u, &self.model, &self.noise)?;
        self.state = posterior;
        Ok(report)
    }
}
