//! The mixed update rule, stubbornness schedules and trajectory generation.

mod schedule;
mod simulate;
mod state;

pub use schedule::{async_agent, Schedule};
pub use simulate::{
    initial_state, simulate, simulate_from, InitialSource, ModelConfig, MonitorFlags, StopReason, Trajectory,
    TrajectoryHeader, Violation, FORMAT_VERSION,
};
pub use state::{averaging_matrix, dist, neighborhoods, sq_dist, step, OpinionState, MAX_MAGNITUDE};

pub(crate) use state::validate_alpha;
