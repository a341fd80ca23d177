//! Synthetic ground truth: turbulent wind, true `Cp` deviations, a baseline
//! controller and the closed-loop drivetrain.

mod controller;
mod schedule;
mod sim;
mod wind;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use controller::{operating_point, BaselineController, ControllerSettings};
pub use schedule::{generate_cp_schedule, ScheduleKind, TrueCpSchedule};
pub use sim::{
    simulate_plant, simulate_with_wind, PlantRecord, PlantSetup, PlantTrajectory, OVERSPEED_LIMIT,
};
pub use wind::{
    generate_wind, rotor_average, ScenarioPreset, WindField, GRID_POINTS, POINT_CORNER_HZ,
    SHARED_CORNER_HZ, SHARED_VARIANCE_FRACTION,
};

/// Independent random stream `stream` derived from a run seed.
pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
