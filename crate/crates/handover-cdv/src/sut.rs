//! The system under test: the robot's handover controller as an
//! instrumented finite-state machine.
//!
//! Instrumentation is explicit: every action body of the FSM owns a block of
//! statement ids and reports the block when it executes, so statement
//! coverage needs no source-level tracing.

use serde::{Deserialize, Serialize};

use crate::world::{GplReading, MotionCommand, Pose, WorldConfig};

/// FSM locations of the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Location {
    WaitActivation,
    AnnounceStart,
    PickObject,
    HoldOut,
    WaitHumanReady,
    Sensing,
    Deciding,
    Releasing,
    NotReleasing,
    TimedOutEnd,
    Done,
}

impl Location {
    pub const ALL: [Location; 11] = [
        Location::WaitActivation,
        Location::AnnounceStart,
        Location::PickObject,
        Location::HoldOut,
        Location::WaitHumanReady,
        Location::Sensing,
        Location::Deciding,
        Location::Releasing,
        Location::NotReleasing,
        Location::TimedOutEnd,
        Location::Done,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Location::WaitActivation => "wait_activation",
            Location::AnnounceStart => "announce_start",
            Location::PickObject => "pick_object",
            Location::HoldOut => "hold_out",
            Location::WaitHumanReady => "wait_human_ready",
            Location::Sensing => "sensing",
            Location::Deciding => "deciding",
            Location::Releasing => "releasing",
            Location::NotReleasing => "not_releasing",
            Location::TimedOutEnd => "timed_out_end",
            Location::Done => "done",
        }
    }
}

/// Signals the human can assert toward the robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HumanSignal {
    ActivateRobot,
    HumanIsReady,
}

impl HumanSignal {
    pub fn wire_name(&self) -> &'static str {
        match self {
            HumanSignal::ActivateRobot => "activateRobot",
            HumanSignal::HumanIsReady => "humanIsReady",
        }
    }
}

/// Signals the robot emits toward the human.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RobotSignal {
    InformHumanOfHandoverStart,
}

impl RobotSignal {
    pub fn wire_name(&self) -> &'static str {
        match self {
            RobotSignal::InformHumanOfHandoverStart => "informHumanOfHandoverStart",
        }
    }
}

/// Terminal outcome of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RunOutcome {
    TimedOut,
    Released,
    NotReleased,
}

impl RunOutcome {
    pub fn name(&self) -> &'static str {
        match self {
            RunOutcome::TimedOut => "TimedOut",
            RunOutcome::Released => "Released",
            RunOutcome::NotReleased => "NotReleased",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeedProfile {
    /// Reproduces the platform's speed defect: pickup motion above the
    /// 0.25 m/s safety threshold.
    Flawed,
    /// All commanded speeds below the threshold.
    Safe,
}

/// Controller parameters. Timeouts are tick counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotConfig {
    pub wait_activation_timeout: u32,
    pub wait_ready_timeout: u32,
    pub sensing_timeout: u32,
    pub pickup_speed: f64,
    pub handover_speed: f64,
    pub speed_profile: SpeedProfile,
}

impl RobotConfig {
    pub fn flawed() -> Self {
        Self {
            wait_activation_timeout: 1200,
            wait_ready_timeout: 1200,
            sensing_timeout: 600,
            pickup_speed: 0.4,
            handover_speed: 0.2,
            speed_profile: SpeedProfile::Flawed,
        }
    }

    pub fn safe() -> Self {
        Self {
            pickup_speed: 0.2,
            speed_profile: SpeedProfile::Safe,
            ..Self::flawed()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.wait_activation_timeout == 0
            || self.wait_ready_timeout == 0
            || self.sensing_timeout == 0
        {
            return Err("timeouts must be positive".into());
        }
        if self.pickup_speed <= 0.0 || self.handover_speed <= 0.0 {
            return Err("speeds must be positive".into());
        }
        match self.speed_profile {
            SpeedProfile::Flawed if self.pickup_speed <= 0.25 => {
                Err("flawed profile requires pickup speed above 0.25 m/s".into())
            }
            SpeedProfile::Safe if self.pickup_speed > 0.25 || self.handover_speed > 0.25 => {
                Err("safe profile requires all speeds at most 0.25 m/s".into())
            }
            _ => Ok(()),
        }
    }
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self::flawed()
    }
}

/// Sampled timeout overrides bound into a concrete test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeoutOverrides {
    pub wait_activation: u32,
    pub wait_ready: u32,
    pub sensing: u32,
}

impl RobotConfig {
    pub fn with_overrides(mut self, o: &TimeoutOverrides) -> Self {
        self.wait_activation_timeout = o.wait_activation;
        self.wait_ready_timeout = o.wait_ready;
        self.sensing_timeout = o.sensing;
        self
    }
}

/// One executed statement, as reported by the instrumentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementHit {
    pub statement_id: u32,
    pub location: Location,
    pub tick: u64,
}

/// Static description of one statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementInfo {
    pub statement_id: u32,
    pub location: Location,
    pub description: String,
}

/// Statement blocks of the controller body, grouped by FSM location.
/// Block sizes stand in for the real action bodies' statement counts.
const BLOCKS: &[(Location, &str, u32)] = &[
    (Location::WaitActivation, "entry", 7),
    (Location::WaitActivation, "poll", 5),
    (Location::WaitActivation, "heard", 6),
    (Location::WaitActivation, "timeout", 6),
    (Location::AnnounceStart, "entry", 6),
    (Location::AnnounceStart, "announce", 6),
    (Location::PickObject, "entry", 7),
    (Location::PickObject, "approach", 6),
    (Location::PickObject, "grasp", 9),
    (Location::HoldOut, "entry", 6),
    (Location::HoldOut, "carry", 5),
    (Location::HoldOut, "present", 6),
    (Location::WaitHumanReady, "entry", 6),
    (Location::WaitHumanReady, "poll", 5),
    (Location::WaitHumanReady, "heard", 6),
    (Location::WaitHumanReady, "timeout", 6),
    (Location::Sensing, "entry", 7),
    (Location::Sensing, "sample", 7),
    (Location::Sensing, "latch", 7),
    (Location::Sensing, "timeout", 6),
    (Location::Deciding, "entry", 5),
    (Location::Deciding, "release_path", 7),
    (Location::Deciding, "hold_path", 7),
    (Location::Releasing, "entry", 6),
    (Location::Releasing, "open_gripper", 7),
    (Location::Releasing, "retract", 5),
    (Location::Releasing, "finish", 4),
    (Location::NotReleasing, "entry", 6),
    (Location::NotReleasing, "retract", 5),
    (Location::NotReleasing, "finish", 4),
    (Location::TimedOutEnd, "entry", 6),
    (Location::TimedOutEnd, "finish", 4),
    (Location::Done, "entry", 5),
];

/// Block identifiers used by the FSM handlers below.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    WaitActivationEntry,
    WaitActivationPoll,
    WaitActivationHeard,
    WaitActivationTimeout,
    AnnounceEntry,
    AnnounceAnnounce,
    PickEntry,
    PickApproach,
    PickGrasp,
    HoldOutEntry,
    HoldOutCarry,
    HoldOutPresent,
    WaitReadyEntry,
    WaitReadyPoll,
    WaitReadyHeard,
    WaitReadyTimeout,
    SensingEntry,
    SensingSample,
    SensingLatch,
    SensingTimeout,
    DecidingEntry,
    DecidingRelease,
    DecidingHold,
    ReleasingEntry,
    ReleasingOpenGripper,
    ReleasingRetract,
    ReleasingFinish,
    NotReleasingEntry,
    NotReleasingRetract,
    NotReleasingFinish,
    TimedOutEntry,
    TimedOutFinish,
    DoneEntry,
}

impl Block {
    fn index(self) -> usize {
        self as usize
    }
}

/// `(first_id, len, location)` per block, derived from `BLOCKS`.
fn block_ranges() -> Vec<(u32, u32, Location)> {
    let mut out = Vec::with_capacity(BLOCKS.len());
    let mut next = 0u32;
    for (loc, _, len) in BLOCKS {
        out.push((next, *len, *loc));
        next += len;
    }
    out
}

/// Total number of statements in the controller.
pub fn statement_count() -> u32 {
    BLOCKS.iter().map(|(_, _, len)| len).sum()
}

/// The static statement table: dense ids `0..N`, partitioned by location.
pub fn statement_table() -> Vec<StatementInfo> {
    let mut out = Vec::with_capacity(statement_count() as usize);
    let mut next = 0u32;
    for (loc, name, len) in BLOCKS {
        for k in 0..*len {
            out.push(StatementInfo {
                statement_id: next,
                location: *loc,
                description: format!("{}.{name}[{k}]", loc.name()),
            });
            next += 1;
        }
    }
    out
}

/// Release decision over a complete sensor reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Release,
    NotRelease,
}

/// The robot releases exactly when all three sensors read Ok.
pub fn decide(gpl: &GplReading) -> Decision {
    if gpl.all_ok() {
        Decision::Release
    } else {
        Decision::NotRelease
    }
}

/// Per-tick inputs observed by the controller.
#[derive(Debug, Clone, Copy)]
pub struct RobotInputs {
    pub activate_heard: bool,
    pub ready_heard: bool,
    pub gpl: GplReading,
    /// The human held still and wrote nothing during the last world step.
    pub human_settled: bool,
    pub hand: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GripperCommand {
    Close,
    Open,
}

/// What one controller step produced.
#[derive(Debug, Clone, Default)]
pub struct RobotOutput {
    pub motion: Option<MotionCommand>,
    pub gripper: Option<GripperCommand>,
    pub emitted: Option<RobotSignal>,
    pub outcome: Option<RunOutcome>,
    /// Set when the step transitioned into a new location.
    pub entered: Option<Location>,
    pub hits: Vec<StatementHit>,
}

/// Controller state between steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub location: Location,
    /// Completed steps in the current location.
    pub clock: u32,
    pub gpl_latest: Option<GplReading>,
}

/// The controller plus its config and scene waypoints.
#[derive(Debug, Clone)]
pub struct Robot {
    config: RobotConfig,
    state: RobotState,
    pickup_pose: Pose,
    holdout_pose: Pose,
    tucked_pose: Pose,
    ranges: Vec<(u32, u32, Location)>,
}

impl Robot {
    pub fn new(config: RobotConfig, scene: &WorldConfig) -> Self {
        Self {
            config,
            state: RobotState {
                location: Location::WaitActivation,
                clock: 0,
                gpl_latest: None,
            },
            pickup_pose: scene.object_home,
            holdout_pose: scene.holdout_pose,
            tucked_pose: scene.robot_hand_tucked,
            ranges: block_ranges(),
        }
    }

    pub fn config(&self) -> &RobotConfig {
        &self.config
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    /// True once the Done entry body has executed; the run can stop.
    pub fn halted(&self) -> bool {
        self.state.location == Location::Done && self.state.clock >= 1
    }

    fn hit(&self, out: &mut RobotOutput, block: Block, tick: u64) {
        let (first, len, loc) = self.ranges[block.index()];
        for id in first..first + len {
            out.hits.push(StatementHit {
                statement_id: id,
                location: loc,
                tick,
            });
        }
    }

    fn transition(&mut self, out: &mut RobotOutput, to: Location) {
        self.state.location = to;
        self.state.clock = 0;
        out.entered = Some(to);
    }

    fn arrived(&self, hand: &Pose, target: &Pose) -> bool {
        hand.distance(target) < 1e-9
    }

    /// Runs one controller step. Called exactly once per world tick, after
    /// the world has stepped.
    pub fn step(&mut self, inputs: &RobotInputs, tick: u64) -> RobotOutput {
        let mut out = RobotOutput::default();
        let loc = self.state.location;
        let entering = self.state.clock == 0;
        match loc {
            Location::WaitActivation => {
                if entering {
                    self.hit(&mut out, Block::WaitActivationEntry, tick);
                }
                self.hit(&mut out, Block::WaitActivationPoll, tick);
                if self.state.clock >= self.config.wait_activation_timeout {
                    self.hit(&mut out, Block::WaitActivationTimeout, tick);
                    out.outcome = Some(RunOutcome::TimedOut);
                    self.transition(&mut out, Location::TimedOutEnd);
                } else if inputs.activate_heard {
                    self.hit(&mut out, Block::WaitActivationHeard, tick);
                    self.transition(&mut out, Location::AnnounceStart);
                }
            }
            Location::AnnounceStart => {
                self.hit(&mut out, Block::AnnounceEntry, tick);
                self.hit(&mut out, Block::AnnounceAnnounce, tick);
                out.emitted = Some(RobotSignal::InformHumanOfHandoverStart);
                self.transition(&mut out, Location::PickObject);
            }
            Location::PickObject => {
                if entering {
                    self.hit(&mut out, Block::PickEntry, tick);
                }
                if self.arrived(&inputs.hand, &self.pickup_pose) {
                    self.hit(&mut out, Block::PickGrasp, tick);
                    out.gripper = Some(GripperCommand::Close);
                    self.transition(&mut out, Location::HoldOut);
                } else {
                    self.hit(&mut out, Block::PickApproach, tick);
                    out.motion = Some(MotionCommand::robot_hand(
                        self.pickup_pose,
                        self.config.pickup_speed,
                    ));
                }
            }
            Location::HoldOut => {
                if entering {
                    self.hit(&mut out, Block::HoldOutEntry, tick);
                }
                if self.arrived(&inputs.hand, &self.holdout_pose) {
                    self.hit(&mut out, Block::HoldOutPresent, tick);
                    self.transition(&mut out, Location::WaitHumanReady);
                } else {
                    self.hit(&mut out, Block::HoldOutCarry, tick);
                    out.motion = Some(MotionCommand::robot_hand(
                        self.holdout_pose,
                        self.config.handover_speed,
                    ));
                }
            }
            Location::WaitHumanReady => {
                if entering {
                    self.hit(&mut out, Block::WaitReadyEntry, tick);
                }
                self.hit(&mut out, Block::WaitReadyPoll, tick);
                if self.state.clock >= self.config.wait_ready_timeout {
                    self.hit(&mut out, Block::WaitReadyTimeout, tick);
                    out.outcome = Some(RunOutcome::TimedOut);
                    self.transition(&mut out, Location::TimedOutEnd);
                } else if inputs.ready_heard {
                    self.hit(&mut out, Block::WaitReadyHeard, tick);
                    self.transition(&mut out, Location::Sensing);
                }
            }
            Location::Sensing => {
                if entering {
                    self.hit(&mut out, Block::SensingEntry, tick);
                }
                // Timing out takes precedence over latching on the same tick.
                if self.state.clock >= self.config.sensing_timeout {
                    self.hit(&mut out, Block::SensingTimeout, tick);
                    out.outcome = Some(RunOutcome::TimedOut);
                    self.transition(&mut out, Location::TimedOutEnd);
                } else {
                    self.hit(&mut out, Block::SensingSample, tick);
                    if inputs.human_settled {
                        self.hit(&mut out, Block::SensingLatch, tick);
                        self.state.gpl_latest = Some(inputs.gpl);
                        self.transition(&mut out, Location::Deciding);
                    }
                }
            }
            Location::Deciding => {
                self.hit(&mut out, Block::DecidingEntry, tick);
                let gpl = self
                    .state
                    .gpl_latest
                    .expect("deciding requires a latched reading");
                match decide(&gpl) {
                    Decision::Release => {
                        self.hit(&mut out, Block::DecidingRelease, tick);
                        out.outcome = Some(RunOutcome::Released);
                        self.transition(&mut out, Location::Releasing);
                    }
                    Decision::NotRelease => {
                        self.hit(&mut out, Block::DecidingHold, tick);
                        out.outcome = Some(RunOutcome::NotReleased);
                        self.transition(&mut out, Location::NotReleasing);
                    }
                }
            }
            Location::Releasing => {
                if entering {
                    self.hit(&mut out, Block::ReleasingEntry, tick);
                    self.hit(&mut out, Block::ReleasingOpenGripper, tick);
                    out.gripper = Some(GripperCommand::Open);
                }
                if self.arrived(&inputs.hand, &self.tucked_pose) {
                    self.hit(&mut out, Block::ReleasingFinish, tick);
                    self.transition(&mut out, Location::Done);
                } else {
                    self.hit(&mut out, Block::ReleasingRetract, tick);
                    out.motion = Some(MotionCommand::robot_hand(
                        self.tucked_pose,
                        self.config.handover_speed,
                    ));
                }
            }
            Location::NotReleasing => {
                if entering {
                    self.hit(&mut out, Block::NotReleasingEntry, tick);
                }
                if self.arrived(&inputs.hand, &self.tucked_pose) {
                    self.hit(&mut out, Block::NotReleasingFinish, tick);
                    self.transition(&mut out, Location::Done);
                } else {
                    self.hit(&mut out, Block::NotReleasingRetract, tick);
                    out.motion = Some(MotionCommand::robot_hand(
                        self.tucked_pose,
                        self.config.handover_speed,
                    ));
                }
            }
            Location::TimedOutEnd => {
                self.hit(&mut out, Block::TimedOutEntry, tick);
                self.hit(&mut out, Block::TimedOutFinish, tick);
                self.transition(&mut out, Location::Done);
            }
            Location::Done => {
                if entering {
                    self.hit(&mut out, Block::DoneEntry, tick);
                }
            }
        }

        if out.entered.is_none() {
            self.state.clock += 1;
        }
        out
    }
}
