//! Planar simulator, ground-station protocol and swim-test harness for a
//! thunniform robotic fish driven by a servo, an elastic plate and a
//! spring-hinged caudal fin.

pub mod dynamics;
pub mod fmt;
pub mod geom;
pub mod harness;
pub mod hydro;
pub mod params;
pub mod protocol;
pub mod server;
pub mod tail;

pub use dynamics::{simulate, step_rk4, FullState, SimError, TrajectoryLog};
pub use harness::{ExperimentRecord, SteadySegment};
pub use protocol::{parse_command, session_step, Command, Mode, SessionState};
pub use params::{
    load_params, validate_command, BodyState, RobotParams, SimConfig, TailCommand, TailState,
};
