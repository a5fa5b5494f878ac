//! The handover protocol as a two-automaton network (human and robot), the
//! reachability properties over it, and target-name parsing.
//!
//! The robot automaton mirrors the controller FSM with timeouts abstracted
//! to small constants; the human automaton can skip activation, stop after
//! the first signal, commit to any of the eight sensor configurations once,
//! or disengage while the robot is sensing. Branch weights sketch the
//! relative likelihood of the human's choices and are ignored by
//! reachability.

use thiserror::Error;

use super::automaton::{
    ActorKind, Automaton, AutomatonId, Channel, ChannelId, Edge, GuardAtom, LocationId, Network,
    Sync, UpdateAtom, VarId,
};
use super::check::{PredAtom, Property, StatePredicate};
use crate::coverage::{CrossTuple, HumanEvent, tuple_universe};
use crate::sut::RunOutcome;

/// Abstracted robot timeout, ticks of model time.
pub const MODEL_TIMEOUT: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolVars {
    pub activated: VarId,
    pub ready: VarId,
    pub gaze: VarId,
    pub pressure: VarId,
    pub location: VarId,
    pub disengaged: VarId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RobotLocations {
    pub wait_activation: LocationId,
    pub announce: LocationId,
    pub pick: LocationId,
    pub hold_out: LocationId,
    pub wait_ready: LocationId,
    pub sensing: LocationId,
    pub released: LocationId,
    pub not_released: LocationId,
    pub timed_out: LocationId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HumanLocations {
    pub idle: LocationId,
    pub await_announce: LocationId,
    pub announced: LocationId,
    pub gpl_stage: LocationId,
    pub set_done: LocationId,
    pub gone: LocationId,
    pub passive: LocationId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolChannels {
    pub activate: ChannelId,
    pub inform: ChannelId,
    pub ready: ChannelId,
    pub set_gpl: ChannelId,
    pub release: ChannelId,
    pub not_release: ChannelId,
    pub timeout: ChannelId,
    pub disengage: ChannelId,
}

/// The built protocol model plus the indices needed to talk about it.
#[derive(Debug, Clone)]
pub struct ProtocolModel {
    pub network: Network,
    pub human: AutomatonId,
    pub robot: AutomatonId,
    pub vars: ProtocolVars,
    pub robot_locations: RobotLocations,
    pub human_locations: HumanLocations,
    pub channels: ProtocolChannels,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TargetParseError {
    #[error("unknown target `{0}` (expected `req:R1`..`req:R4` or `tuple:<Human>,<Outcome>`)")]
    Unknown(String),
}

pub fn build_protocol_model() -> ProtocolModel {
    let channels = vec![
        Channel { name: "activateRobot".into(), broadcast: false },
        Channel { name: "informHumanOfHandoverStart".into(), broadcast: true },
        Channel { name: "humanIsReady".into(), broadcast: false },
        Channel { name: "setGPL".into(), broadcast: false },
        Channel { name: "release".into(), broadcast: true },
        Channel { name: "notRelease".into(), broadcast: true },
        Channel { name: "timeout".into(), broadcast: true },
        Channel { name: "disengage".into(), broadcast: false },
    ];
    let ch = ProtocolChannels {
        activate: 0,
        inform: 1,
        ready: 2,
        set_gpl: 3,
        release: 4,
        not_release: 5,
        timeout: 6,
        disengage: 7,
    };

    let vars = ProtocolVars {
        activated: 0,
        ready: 1,
        gaze: 2,
        pressure: 3,
        location: 4,
        disengaged: 5,
    };
    let var_names = vec![
        "activated".into(),
        "ready".into(),
        "gaze".into(),
        "pressure".into(),
        "location".into(),
        "disengaged".into(),
    ];
    let clock_names = vec!["x".into()];
    let x = 0;

    let hl = HumanLocations {
        idle: 0,
        await_announce: 1,
        announced: 2,
        gpl_stage: 3,
        set_done: 4,
        gone: 5,
        passive: 6,
    };
    let mut human_edges = vec![
        Edge {
            source: hl.idle,
            guard: vec![],
            sync: Sync::Emit(ch.activate),
            weight: 3,
            updates: vec![UpdateAtom::SetVar(vars.activated, 1)],
            target: hl.await_announce,
        },
        Edge {
            source: hl.idle,
            guard: vec![],
            sync: Sync::Internal,
            weight: 1,
            updates: vec![],
            target: hl.passive,
        },
        Edge {
            source: hl.await_announce,
            guard: vec![],
            sync: Sync::Receive(ch.inform),
            weight: 2,
            updates: vec![],
            target: hl.announced,
        },
        Edge {
            source: hl.await_announce,
            guard: vec![],
            sync: Sync::Internal,
            weight: 1,
            updates: vec![],
            target: hl.passive,
        },
        Edge {
            source: hl.announced,
            guard: vec![],
            sync: Sync::Emit(ch.ready),
            weight: 3,
            updates: vec![UpdateAtom::SetVar(vars.ready, 1)],
            target: hl.gpl_stage,
        },
        Edge {
            source: hl.announced,
            guard: vec![],
            sync: Sync::Internal,
            weight: 1,
            updates: vec![],
            target: hl.passive,
        },
    ];
    // One committed sensor configuration per run: the eight combinations.
    for bits in 0..8u8 {
        human_edges.push(Edge {
            source: hl.gpl_stage,
            guard: vec![],
            sync: Sync::Emit(ch.set_gpl),
            weight: 2,
            updates: vec![
                UpdateAtom::SetVar(vars.gaze, ((bits >> 2) & 1) as i8),
                UpdateAtom::SetVar(vars.pressure, ((bits >> 1) & 1) as i8),
                UpdateAtom::SetVar(vars.location, (bits & 1) as i8),
            ],
            target: hl.set_done,
        });
    }
    for source in [hl.gpl_stage, hl.set_done] {
        human_edges.push(Edge {
            source,
            guard: vec![],
            sync: Sync::Emit(ch.disengage),
            weight: 1,
            updates: vec![
                UpdateAtom::SetVar(vars.disengaged, 1),
                UpdateAtom::SetVar(vars.gaze, 0),
                UpdateAtom::SetVar(vars.pressure, 0),
                UpdateAtom::SetVar(vars.location, 0),
            ],
            target: hl.gone,
        });
    }
    let human = Automaton {
        name: "Human".into(),
        actor: ActorKind::Human,
        locations: vec![
            "Idle".into(),
            "AwaitAnnounce".into(),
            "Announced".into(),
            "GplStage".into(),
            "SetDone".into(),
            "Gone".into(),
            "Passive".into(),
        ],
        initial: hl.idle,
        edges: human_edges,
    };

    let rl = RobotLocations {
        wait_activation: 0,
        announce: 1,
        pick: 2,
        hold_out: 3,
        wait_ready: 4,
        sensing: 5,
        released: 6,
        not_released: 7,
        timed_out: 8,
    };
    let all_ok = |v: &ProtocolVars| {
        vec![
            GuardAtom::ClockAtLeast(x, 1),
            GuardAtom::VarEq(v.gaze, 1),
            GuardAtom::VarEq(v.pressure, 1),
            GuardAtom::VarEq(v.location, 1),
        ]
    };
    let robot_edges = vec![
        Edge {
            source: rl.wait_activation,
            guard: vec![],
            sync: Sync::Receive(ch.activate),
            weight: 1,
            updates: vec![UpdateAtom::ResetClock(x)],
            target: rl.announce,
        },
        Edge {
            source: rl.wait_activation,
            guard: vec![GuardAtom::ClockAtLeast(x, MODEL_TIMEOUT)],
            sync: Sync::Emit(ch.timeout),
            weight: 1,
            updates: vec![],
            target: rl.timed_out,
        },
        Edge {
            source: rl.announce,
            guard: vec![],
            sync: Sync::Emit(ch.inform),
            weight: 1,
            updates: vec![UpdateAtom::ResetClock(x)],
            target: rl.pick,
        },
        Edge {
            source: rl.pick,
            guard: vec![GuardAtom::ClockAtLeast(x, 1)],
            sync: Sync::Internal,
            weight: 1,
            updates: vec![UpdateAtom::ResetClock(x)],
            target: rl.hold_out,
        },
        Edge {
            source: rl.hold_out,
            guard: vec![GuardAtom::ClockAtLeast(x, 1)],
            sync: Sync::Internal,
            weight: 1,
            updates: vec![UpdateAtom::ResetClock(x)],
            target: rl.wait_ready,
        },
        Edge {
            source: rl.wait_ready,
            guard: vec![],
            sync: Sync::Receive(ch.ready),
            weight: 1,
            updates: vec![UpdateAtom::ResetClock(x)],
            target: rl.sensing,
        },
        Edge {
            source: rl.wait_ready,
            guard: vec![GuardAtom::ClockAtLeast(x, MODEL_TIMEOUT)],
            sync: Sync::Emit(ch.timeout),
            weight: 1,
            updates: vec![],
            target: rl.timed_out,
        },
        Edge {
            source: rl.sensing,
            guard: vec![],
            sync: Sync::Receive(ch.set_gpl),
            weight: 1,
            updates: vec![],
            target: rl.sensing,
        },
        Edge {
            source: rl.sensing,
            guard: vec![],
            sync: Sync::Receive(ch.disengage),
            weight: 1,
            updates: vec![],
            target: rl.sensing,
        },
        Edge {
            source: rl.sensing,
            guard: all_ok(&vars),
            sync: Sync::Emit(ch.release),
            weight: 1,
            updates: vec![],
            target: rl.released,
        },
        Edge {
            source: rl.sensing,
            guard: vec![GuardAtom::ClockAtLeast(x, 1), GuardAtom::VarEq(vars.gaze, 0)],
            sync: Sync::Emit(ch.not_release),
            weight: 1,
            updates: vec![],
            target: rl.not_released,
        },
        Edge {
            source: rl.sensing,
            guard: vec![GuardAtom::ClockAtLeast(x, 1), GuardAtom::VarEq(vars.pressure, 0)],
            sync: Sync::Emit(ch.not_release),
            weight: 1,
            updates: vec![],
            target: rl.not_released,
        },
        Edge {
            source: rl.sensing,
            guard: vec![GuardAtom::ClockAtLeast(x, 1), GuardAtom::VarEq(vars.location, 0)],
            sync: Sync::Emit(ch.not_release),
            weight: 1,
            updates: vec![],
            target: rl.not_released,
        },
        Edge {
            source: rl.sensing,
            guard: vec![GuardAtom::ClockAtLeast(x, MODEL_TIMEOUT)],
            sync: Sync::Emit(ch.timeout),
            weight: 1,
            updates: vec![],
            target: rl.timed_out,
        },
    ];
    let robot = Automaton {
        name: "Robot".into(),
        actor: ActorKind::Robot,
        locations: vec![
            "WaitActivation".into(),
            "AnnounceStart".into(),
            "PickObject".into(),
            "HoldOut".into(),
            "WaitHumanReady".into(),
            "Sensing".into(),
            "Released".into(),
            "NotReleased".into(),
            "TimedOut".into(),
        ],
        initial: rl.wait_activation,
        edges: robot_edges,
    };

    let network = Network::new(vec![human, robot], channels, clock_names, var_names)
        .expect("protocol model is well formed");
    ProtocolModel {
        network,
        human: 0,
        robot: 1,
        vars,
        robot_locations: rl,
        human_locations: hl,
        channels: ch,
    }
}

impl ProtocolModel {
    pub fn outcome_location(&self, outcome: RunOutcome) -> LocationId {
        match outcome {
            RunOutcome::TimedOut => self.robot_locations.timed_out,
            RunOutcome::Released => self.robot_locations.released,
            RunOutcome::NotReleased => self.robot_locations.not_released,
        }
    }

    /// Reach-property for one cross-product tuple.
    pub fn tuple_property(&self, tuple: &CrossTuple) -> Property {
        let v = &self.vars;
        let mut atoms = vec![PredAtom::AutomatonAt(
            self.robot,
            self.outcome_location(tuple.robot),
        )];
        match tuple.human {
            HumanEvent::NotActive => atoms.push(PredAtom::VarEq(v.activated, 0)),
            HumanEvent::ActivSignal => {
                atoms.push(PredAtom::VarEq(v.activated, 1));
                atoms.push(PredAtom::VarEq(v.ready, 0));
            }
            HumanEvent::Gpl { gaze, pressure, location } => {
                atoms.push(PredAtom::VarEq(v.ready, 1));
                atoms.push(PredAtom::VarEq(v.disengaged, 0));
                atoms.push(PredAtom::VarEq(v.gaze, gaze as i8));
                atoms.push(PredAtom::VarEq(v.pressure, pressure as i8));
                atoms.push(PredAtom::VarEq(v.location, location as i8));
            }
            HumanEvent::Disengaged => atoms.push(PredAtom::VarEq(v.disengaged, 1)),
        }
        Property::reach(format!("tuple:{}", tuple_name(tuple)), StatePredicate { atoms })
    }

    /// Reach-properties for the first four requirements: release reached,
    /// non-release reached, sensing reached, any terminal reached.
    pub fn requirement_property(&self, n: u8) -> Option<Property> {
        let rl = &self.robot_locations;
        let p = match n {
            1 => Property::reach(
                "req:R1",
                StatePredicate {
                    atoms: vec![PredAtom::AutomatonAt(self.robot, rl.released)],
                },
            ),
            2 => Property::reach(
                "req:R2",
                StatePredicate {
                    atoms: vec![PredAtom::AutomatonAt(self.robot, rl.not_released)],
                },
            ),
            3 => Property::reach(
                "req:R3",
                StatePredicate {
                    atoms: vec![PredAtom::AutomatonAt(self.robot, rl.sensing)],
                },
            ),
            4 => Property::reach(
                "req:R4",
                StatePredicate {
                    atoms: vec![PredAtom::AutomatonAtAny(
                        self.robot,
                        vec![rl.released, rl.not_released, rl.timed_out],
                    )],
                },
            ),
            _ => return None,
        };
        Some(p)
    }

    /// Parses a campaign target name: `req:R1`..`req:R4` or
    /// `tuple:<Human>,<Outcome>` with `<Human>` one of `NotActive`,
    /// `ActivSignal`, `GPL=xyz`, `Disengaged`.
    pub fn parse_target(&self, name: &str) -> Result<Property, TargetParseError> {
        let unknown = || TargetParseError::Unknown(name.to_string());
        if let Some(req) = name.strip_prefix("req:") {
            let n = match req {
                "R1" | "r1" => 1,
                "R2" | "r2" => 2,
                "R3" | "r3" => 3,
                "R4" | "r4" => 4,
                _ => return Err(unknown()),
            };
            return Ok(self.requirement_property(n).expect("1..=4"));
        }
        if let Some(rest) = name.strip_prefix("tuple:") {
            let (human_s, robot_s) = rest.split_once(',').ok_or_else(unknown)?;
            let robot = match robot_s.trim() {
                "TimedOut" => RunOutcome::TimedOut,
                "Released" => RunOutcome::Released,
                "NotReleased" => RunOutcome::NotReleased,
                _ => return Err(unknown()),
            };
            let human = match human_s.trim() {
                "NotActive" => HumanEvent::NotActive,
                "ActivSignal" => HumanEvent::ActivSignal,
                "Disengaged" => HumanEvent::Disengaged,
                g => {
                    let bits = g.strip_prefix("GPL=").ok_or_else(unknown)?;
                    if bits.len() != 3 || !bits.chars().all(|c| c == '0' || c == '1') {
                        return Err(unknown());
                    }
                    let b: Vec<bool> = bits.chars().map(|c| c == '1').collect();
                    HumanEvent::Gpl { gaze: b[0], pressure: b[1], location: b[2] }
                }
            };
            return Ok(self.tuple_property(&CrossTuple { human, robot }));
        }
        Err(unknown())
    }

    /// Target names for every tuple in the canonical universe order.
    pub fn all_tuple_targets(&self) -> Vec<(CrossTuple, Property)> {
        tuple_universe()
            .into_iter()
            .map(|(t, _)| {
                let p = self.tuple_property(&t);
                (t, p)
            })
            .collect()
    }
}

/// Stable textual tuple name used in target syntax and reports.
pub fn tuple_name(t: &CrossTuple) -> String {
    let human = match t.human {
        HumanEvent::NotActive => "NotActive".to_string(),
        HumanEvent::ActivSignal => "ActivSignal".to_string(),
        HumanEvent::Gpl { gaze, pressure, location } => {
            let b = |v: bool| if v { '1' } else { '0' };
            format!("GPL={}{}{}", b(gaze), b(pressure), b(location))
        }
        HumanEvent::Disengaged => "Disengaged".to_string(),
    };
    format!("{human},{}", t.robot.name())
}
