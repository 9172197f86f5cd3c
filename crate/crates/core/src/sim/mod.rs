//! Slot-by-slot lottery simulation and Monte Carlo estimation.

mod estimate;
mod exec;
mod state;
mod stats;
mod trajectory;

pub use estimate::{estimate, holder_tickets, simulate, truncation_bias_bound, z_score, Estimate, Quantity, SimOptions, Simulation, HOLDER, MIN_TRIALS};
pub use exec::{available_workers, map_indexed, StreamFactory};
pub use state::{init_state, step, HolderAssignment, HolderId, MintRule, SlotOutcome, SlotState, Ticket, TicketId, MARKET};
pub(crate) use stats::squared_deviation_covariance;
pub use stats::SampleStats;
pub use trajectory::{default_horizon, discount_horizon, run_trajectory, TrackedOutcome, TrajectoryRecord, TrajectorySetup, HORIZON_TAIL, STREAM_TAIL};
