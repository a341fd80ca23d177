//! Simplified nonlinear turbine model shared by the plant and the filters.

mod cp;
mod dynamics;
mod params;

pub use cp::{AnalyticCp, CpGrid, CpMap, CpSurface, BETZ_LIMIT};
pub use dynamics::{
    aero_torque, aero_torque_partials, jacobian_f, measure, measurement_jacobian, step_dynamics,
    tip_speed_ratio, TurbineModel,
};
pub use params::{
    ControlInput, StateVector, TurbineParameters, MAX_SAMPLE_TIME, OMEGA_FLOOR, WIND_FLOOR,
};
