//! Rotor-effective wind speed and power coefficient estimation with an
//! interacting multiple-model extended Kalman filter.
//!
//! - [`turbine`]: drivetrain model, `Cp` surfaces and analytic Jacobians.
//! - [`ekf`]: extended Kalman filter over a generic [`ekf::StateModel`].
//! - [`imm`]: the interacting multiple-model bank.
//! - [`plant`]: synthetic wind, true `Cp` deviations, controller and plant.
//! - [`harness`]: experiment configuration, metrics and CSV outputs.

pub mod ekf;
pub mod error;
pub mod harness;
pub mod imm;
pub mod plant;
pub mod turbine;

pub use ekf::{EstimatorState, ExtendedKalmanFilter, NoiseModel, StateModel, UpdateReport};
pub use error::{
    ConfigError, CpGridError, DomainError, FilterError, ImmError, OutputError, ParameterError,
    SimulationError,
};
pub use imm::{FilterSlot, ImmOutput, ModeBank, TransitionMatrix};
pub use turbine::{ControlInput, CpSurface, StateVector, TurbineModel, TurbineParameters};
