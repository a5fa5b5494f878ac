//! Model-based test generation: a discrete-timed automata model of the
//! handover protocol, an explicit-state reachability checker, and the
//! projection of witness traces into abstract tests.

mod automaton;
mod check;
mod project;
mod protocol;

pub use automaton::{
    ActorKind, Automaton, AutomatonId, Channel, ChannelId, ClockId, Edge, EdgeId, FiringDetail,
    GuardAtom, LocationId, ModelError, Network, NetworkState, ReplayError, Sync, UpdateAtom,
    VarId, WitnessStep,
};
pub use check::{
    CheckConfig, CheckError, CheckOutcome, CheckReport, PredAtom, Property, PropertyKind,
    StatePredicate, WitnessTrace, check,
};
pub use project::{MbtError, TargetedGeneration, generate_targeted, witness_to_abstract_test};
pub use protocol::{
    MODEL_TIMEOUT, ProtocolChannels, ProtocolModel, ProtocolVars, RobotLocations,
    TargetParseError, build_protocol_model, tuple_name,
};
