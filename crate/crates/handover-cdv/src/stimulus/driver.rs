//! The reactive driver: enacts a concrete test through the human and
//! environment channels, steps the world and the controller in lockstep and
//! records the run.

use std::collections::BTreeSet;

use thiserror::Error;

use super::actions::{AbstractAction, SensorChannel};
use super::catalog::{ActionBinding, ConcreteTest, RangeCatalog};
use super::trace::{SimTrace, TraceEvent, TraceMeta, TraceRecord};
use crate::sut::{
    GripperCommand, HumanSignal, Robot, RobotConfig, RobotInputs, RobotSignal,
};
use crate::world::{
    HeadAttitude, MotionCommand, Pose, StepError, World, WorldConfig, attitude_distance,
};

/// Consumer fed each trace record as it is produced (the checker side).
pub trait TraceSink {
    fn feed(&mut self, record: &TraceRecord);
}

/// No-op sink for runs that only need the trace.
impl TraceSink for () {
    fn feed(&mut self, _record: &TraceRecord) {}
}

#[derive(Debug, Error)]
pub enum DriveError {
    #[error("test has {actions} actions but {bindings} bindings")]
    MalformedTest { actions: usize, bindings: usize },
    #[error(transparent)]
    Step(#[from] StepError),
}

/// Default run budget: twice the sum of the effective robot timeouts.
pub fn default_max_ticks(cfg: &RobotConfig) -> u64 {
    2 * (cfg.wait_activation_timeout as u64
        + cfg.wait_ready_timeout as u64
        + cfg.sensing_timeout as u64)
}

#[derive(Debug, Clone)]
enum Phase {
    Idle,
    Asserting { signal: HumanSignal, left: u32 },
    Receiving { signal: RobotSignal, left: u32 },
    Waiting { left: u32 },
    MovingHead { target: HeadAttitude },
    MovingHand { target: Pose },
    WritingPressure { value: bool },
    Disengaging { hand: Pose, head: HeadAttitude },
    Halted,
}

#[derive(Debug, Default)]
struct DriverTick {
    commands: Vec<MotionCommand>,
    pressure: Option<bool>,
    asserted: Vec<HumanSignal>,
    events: Vec<TraceEvent>,
    busy: bool,
}

/// Sequential executor over the bound action list.
struct Driver<'a> {
    test: &'a ConcreteTest,
    human_speed: f64,
    idx: usize,
    phase: Phase,
    /// Cumulative sensor settings the human has committed to. Updated at
    /// the start of each contiguous run of sensor actions.
    intent: [bool; 3],
    /// Actions below this index belong to an already-announced intent group.
    group_end: usize,
}

impl<'a> Driver<'a> {
    fn new(test: &'a ConcreteTest, catalog: &RangeCatalog) -> Self {
        Self {
            test,
            human_speed: catalog.human_speed,
            idx: 0,
            phase: Phase::Idle,
            intent: [false; 3],
            group_end: 0,
        }
    }

    fn channel_slot(ch: SensorChannel) -> usize {
        match ch {
            SensorChannel::Gaze => 0,
            SensorChannel::Pressure => 1,
            SensorChannel::Location => 2,
        }
    }

    fn advance(&mut self) {
        self.idx += 1;
        self.phase = Phase::Idle;
    }

    fn tick(&mut self, world: &World, emitted: &BTreeSet<RobotSignal>) -> DriverTick {
        let mut out = DriverTick::default();
        loop {
            match &mut self.phase {
                Phase::Idle => {
                    let Some(action) = self.test.abstract_test.actions.get(self.idx) else {
                        self.phase = Phase::Halted;
                        continue;
                    };
                    let binding = &self.test.bindings[self.idx];

                    // A run of consecutive sensor actions is one committed
                    // configuration; announce it when its first action
                    // starts enacting.
                    if matches!(action, AbstractAction::SetSensor(..)) && self.idx >= self.group_end
                    {
                        let actions = &self.test.abstract_test.actions;
                        let mut j = self.idx;
                        while let Some(AbstractAction::SetSensor(ch, v)) = actions.get(j) {
                            self.intent[Self::channel_slot(*ch)] = *v;
                            j += 1;
                        }
                        self.group_end = j;
                        out.events.push(TraceEvent::HumanIntent {
                            gaze: self.intent[0],
                            pressure: self.intent[1],
                            location: self.intent[2],
                        });
                    }

                    match (action, binding) {
                        (AbstractAction::SendSignal(s), ActionBinding::Signal { duration_ticks }) => {
                            out.events.push(TraceEvent::SignalAsserted {
                                signal: *s,
                                duration_ticks: *duration_ticks,
                            });
                            self.phase = Phase::Asserting {
                                signal: *s,
                                left: *duration_ticks,
                            };
                        }
                        (AbstractAction::ReceiveSignal(s), ActionBinding::Receive { max_wait_ticks }) => {
                            self.phase = Phase::Receiving {
                                signal: *s,
                                left: *max_wait_ticks,
                            };
                        }
                        (AbstractAction::SetTime(_), ActionBinding::Wait { ticks }) => {
                            self.phase = Phase::Waiting { left: (*ticks).max(1) };
                        }
                        (AbstractAction::SetSensor(SensorChannel::Gaze, _), ActionBinding::HeadTarget { attitude }) => {
                            self.phase = Phase::MovingHead { target: *attitude };
                        }
                        (AbstractAction::SetSensor(SensorChannel::Location, _), ActionBinding::HandTarget { pose }) => {
                            self.phase = Phase::MovingHand { target: *pose };
                        }
                        (AbstractAction::SetSensor(SensorChannel::Pressure, _), ActionBinding::PressureFlag { value }) => {
                            self.phase = Phase::WritingPressure { value: *value };
                        }
                        (AbstractAction::Disengage, ActionBinding::DisengageTargets { hand, head }) => {
                            out.events.push(TraceEvent::DisengageStarted);
                            out.pressure = Some(false);
                            out.busy = true;
                            self.phase = Phase::Disengaging {
                                hand: *hand,
                                head: *head,
                            };
                        }
                        (a, b) => {
                            unreachable!("binding {b:?} does not fit action {a:?}")
                        }
                    }
                }
                Phase::Asserting { signal, left } => {
                    out.asserted.push(*signal);
                    out.busy = true;
                    *left -= 1;
                    if *left == 0 {
                        self.advance();
                    }
                    break;
                }
                Phase::Receiving { signal, left } => {
                    if emitted.contains(signal) {
                        // Emissions are latched: a wait that starts after the
                        // signal went by completes immediately.
                        self.advance();
                        continue;
                    }
                    *left -= 1;
                    if *left == 0 {
                        self.advance();
                    }
                    break;
                }
                Phase::Waiting { left } => {
                    *left -= 1;
                    if *left == 0 {
                        self.advance();
                    }
                    break;
                }
                Phase::MovingHead { target } => {
                    if attitude_distance(&world.state().head, target) == 0.0 {
                        self.advance();
                        continue;
                    }
                    out.commands.push(MotionCommand::head(*target, self.human_speed));
                    out.busy = true;
                    break;
                }
                Phase::MovingHand { target } => {
                    if world.state().human_hand.distance(target) == 0.0 {
                        self.advance();
                        continue;
                    }
                    out.commands
                        .push(MotionCommand::human_hand(*target, self.human_speed));
                    out.busy = true;
                    break;
                }
                Phase::WritingPressure { value } => {
                    out.pressure = Some(*value);
                    out.busy = true;
                    self.advance();
                    break;
                }
                Phase::Disengaging { hand, head } => {
                    let hand_done = world.state().human_hand.distance(hand) == 0.0;
                    let head_done = attitude_distance(&world.state().head, head) == 0.0;
                    if hand_done && head_done {
                        // Stopped responding: the rest of the script is dead.
                        self.phase = Phase::Halted;
                        continue;
                    }
                    if !hand_done {
                        out.commands
                            .push(MotionCommand::human_hand(*hand, self.human_speed));
                    }
                    if !head_done {
                        out.commands.push(MotionCommand::head(*head, self.human_speed));
                    }
                    out.busy = true;
                    break;
                }
                Phase::Halted => break,
            }
        }
        out
    }
}

/// Runs one concrete test to completion and records the trace, feeding every
/// record to `sink` as it appears.
///
/// Each tick: the driver acts, the world steps, the controller steps, the
/// tick's records go to the trace and the sink. The run ends when the
/// controller halts or `max_ticks` is exhausted; a run without an outcome
/// is inconclusive.
pub fn drive<S: TraceSink>(
    test: &ConcreteTest,
    world_config: &WorldConfig,
    robot_config: &RobotConfig,
    catalog: &RangeCatalog,
    max_ticks: u64,
    sink: &mut S,
) -> Result<SimTrace, DriveError> {
    if test.abstract_test.actions.len() != test.bindings.len() {
        return Err(DriveError::MalformedTest {
            actions: test.abstract_test.actions.len(),
            bindings: test.bindings.len(),
        });
    }
    let effective = match &test.robot_overrides {
        Some(o) => robot_config.with_overrides(o),
        None => *robot_config,
    };

    let mut world = World::new(world_config.clone());
    let mut robot = Robot::new(effective, world_config);
    let mut driver = Driver::new(test, catalog);
    let mut trace = SimTrace::new(TraceMeta {
        test_id: test.abstract_test.id.clone(),
        seed: test.seed,
        profile: test.profile.name().to_string(),
        sensing_timeout_ticks: effective.sensing_timeout,
    });
    let mut pending_motion: Option<MotionCommand> = None;
    let mut emitted_latched: BTreeSet<RobotSignal> = BTreeSet::new();

    let emit = |trace: &mut SimTrace, sink: &mut S, tick: u64, ev: TraceEvent| {
        trace.push(tick, ev);
        sink.feed(trace.records.last().expect("just pushed"));
    };

    for tick in 0..max_ticks {
        let d = driver.tick(&world, &emitted_latched);
        let mut commands = d.commands;
        if let Some(m) = pending_motion.take() {
            commands.push(m);
        }
        world.step(&commands, d.pressure)?;

        let settled = !d.busy && world.human_quiescent();
        let inputs = RobotInputs {
            activate_heard: d.asserted.contains(&HumanSignal::ActivateRobot),
            ready_heard: d.asserted.contains(&HumanSignal::HumanIsReady),
            gpl: world.sense_gpl(),
            human_settled: settled,
            hand: world.state().robot_hand,
        };
        let out = robot.step(&inputs, tick);
        match out.gripper {
            Some(GripperCommand::Close) => world.close_gripper(),
            Some(GripperCommand::Open) => world.open_gripper(),
            None => {}
        }
        pending_motion = out.motion;
        if let Some(s) = out.emitted {
            emitted_latched.insert(s);
        }

        for ev in d.events {
            emit(&mut trace, sink, tick, ev);
        }
        emit(&mut trace, sink, tick, TraceEvent::Snapshot { state: world.state().clone() });
        if let Some(location) = out.entered {
            emit(&mut trace, sink, tick, TraceEvent::FsmEntered { location });
        }
        for hit in &out.hits {
            emit(&mut trace, sink, tick, TraceEvent::StatementHit {
                statement_id: hit.statement_id,
                location: hit.location,
            });
        }
        if let Some(signal) = out.emitted {
            emit(&mut trace, sink, tick, TraceEvent::SignalEmitted { signal });
        }
        if let Some(outcome) = out.outcome {
            emit(&mut trace, sink, tick, TraceEvent::Outcome { outcome });
        }

        if robot.halted() {
            break;
        }
    }
    Ok(trace)
}
