//! Coverage-driven verification testbench for a robot-to-human object
//! handover controller.
//!
//! The testbench runs the handover controller (an instrumented finite-state
//! machine) inside a deterministic discrete-time world, stimulates it
//! indirectly through a simulated human, checks eleven safety and functional
//! requirements with assertion monitors, and measures requirements,
//! cross-product and statement coverage. Abstract tests come from
//! pseudorandom, constrained or model-based generation; the model-based
//! route extracts witness traces from an explicit-state reachability checker
//! over a discrete-timed automata model of the protocol.

pub mod campaign;
pub mod config;
pub mod coverage;
pub mod mbt;
pub mod monitors;
pub mod rng;
pub mod stimulus;
pub mod sut;
pub mod testgen;
pub mod world;

pub use campaign::{CampaignOutcome, run_campaign};
pub use config::{CampaignConfig, load_config};
pub use coverage::{CoverageReport, CrossTuple, HumanEvent, classify_trace, tuple_universe};
pub use monitors::{MonitorSet, MonitorVerdict, RequirementId, VerdictState};
pub use stimulus::{AbstractTest, ConcreteTest, Profile, RangeCatalog, SimTrace, concretize, drive};
pub use sut::{Robot, RobotConfig, RunOutcome};
pub use world::{TICK_SECONDS, World, WorldConfig, WorldState};
