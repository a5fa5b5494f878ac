//! Deterministic discrete-time kinematic world for the handover scene.
//!
//! Bodies are spheres from a fixed catalog. Motion is straight-line at
//! constant speed, one step per tick, so every distance and speed the
//! monitors check has an exact closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Length of one simulation tick in seconds.
pub const TICK_SECONDS: f64 = 0.05;

/// Coordinates are confined to a cube of this half-extent.
pub const WORLD_BOUND: f64 = 100.0;

/// Weight of one degree of head angle when measuring attitude distances,
/// in metre-equivalents. Keeps head motion times on the same scale as
/// hand motion.
pub const ANGLE_METERS_PER_DEGREE: f64 = 0.01;

/// A point in the world frame, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        let p = Self { x, y, z };
        debug_assert!(p.is_valid(), "pose out of world bounds: {p:?}");
        p
    }

    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.z]
            .iter()
            .all(|c| c.is_finite() && c.abs() <= WORLD_BOUND)
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Head direction relative to the object: vertical offset and horizontal
/// distance in metres, bearing angle in degrees `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadAttitude {
    pub offset: f64,
    pub distance: f64,
    pub angle: f64,
}

impl HeadAttitude {
    pub fn new(offset: f64, distance: f64, angle: f64) -> Self {
        let a = Self {
            offset,
            distance,
            angle: normalize_angle(angle),
        };
        debug_assert!(a.distance >= 0.0, "negative head distance");
        a
    }
}

fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    if r == 360.0 { 0.0 } else { r }
}

/// Signed shortest angular difference `to - from`, in `[-180, 180)`.
fn angle_delta(from: f64, to: f64) -> f64 {
    (to - from + 540.0).rem_euclid(360.0) - 180.0
}

/// Distance between two attitudes in metre-equivalents (angle weighted by
/// [`ANGLE_METERS_PER_DEGREE`], shortest way round).
pub fn attitude_distance(a: &HeadAttitude, b: &HeadAttitude) -> f64 {
    let doff = a.offset - b.offset;
    let ddist = a.distance - b.distance;
    let dang = angle_delta(a.angle, b.angle) * ANGLE_METERS_PER_DEGREE;
    (doff * doff + ddist * ddist + dang * dang).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gripper {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Holder {
    None,
    Robot,
    Human,
    Both,
}

/// Movable actors in the scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Actor {
    RobotHand,
    HumanHand,
    Head,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MotionTarget {
    Point(Pose),
    Attitude(HeadAttitude),
}

/// One actuation request: move `actor` toward `target` at `speed` (m/s, or
/// metre-equivalents per second for the head).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionCommand {
    pub actor: Actor,
    pub target: MotionTarget,
    pub speed: f64,
}

impl MotionCommand {
    pub fn robot_hand(target: Pose, speed: f64) -> Self {
        assert!(speed > 0.0, "motion speed must be positive");
        Self {
            actor: Actor::RobotHand,
            target: MotionTarget::Point(target),
            speed,
        }
    }

    pub fn human_hand(target: Pose, speed: f64) -> Self {
        assert!(speed > 0.0, "motion speed must be positive");
        Self {
            actor: Actor::HumanHand,
            target: MotionTarget::Point(target),
            speed,
        }
    }

    pub fn head(target: HeadAttitude, speed: f64) -> Self {
        assert!(speed > 0.0, "motion speed must be positive");
        Self {
            actor: Actor::Head,
            target: MotionTarget::Attitude(target),
            speed,
        }
    }
}

/// Spherical bodies tracked for distance and collision queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Body {
    RobotHand,
    HumanHand,
    Head,
    Object,
    TorsoLower,
    TorsoUpper,
}

impl Body {
    pub const ALL: [Body; 6] = [
        Body::RobotHand,
        Body::HumanHand,
        Body::Head,
        Body::Object,
        Body::TorsoLower,
        Body::TorsoUpper,
    ];

    /// Bodies belonging to the robot.
    pub const ROBOT: [Body; 3] = [Body::RobotHand, Body::TorsoLower, Body::TorsoUpper];

    /// Bodies belonging to the human.
    pub const HUMAN: [Body; 2] = [Body::HumanHand, Body::Head];
}

/// Sphere radii for the body catalog, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyRadii {
    pub robot_hand: f64,
    pub human_hand: f64,
    pub head: f64,
    pub object: f64,
    pub torso: f64,
}

impl Default for BodyRadii {
    fn default() -> Self {
        Self {
            robot_hand: 0.05,
            human_hand: 0.05,
            head: 0.10,
            object: 0.03,
            torso: 0.15,
        }
    }
}

impl BodyRadii {
    pub fn radius(&self, body: Body) -> f64 {
        match body {
            Body::RobotHand => self.robot_hand,
            Body::HumanHand => self.human_hand,
            Body::Head => self.head,
            Body::Object => self.object,
            Body::TorsoLower | Body::TorsoUpper => self.torso,
        }
    }
}

/// Classification geometry for the three sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorGeometry {
    /// Gaze reads Ok inside this box: offset and distance inclusive on both
    /// ends, angle half-open at the top.
    pub gaze_offset: [f64; 2],
    pub gaze_distance: [f64; 2],
    pub gaze_angle: [f64; 2],
    /// Location reads Ok when the hand-to-object surface gap is at most this.
    pub location_ok_radius: f64,
}

impl Default for SensorGeometry {
    fn default() -> Self {
        Self {
            gaze_offset: [0.1, 0.2],
            gaze_distance: [0.5, 0.6],
            gaze_angle: [15.0, 40.0],
            location_ok_radius: 0.10,
        }
    }
}

/// Fixed scene layout plus the body catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub radii: BodyRadii,
    pub sensors: SensorGeometry,
    pub torso_lower: Pose,
    pub torso_upper: Pose,
    pub robot_hand_home: Pose,
    /// Pose the robot tucks its hand into after finishing a handover.
    pub robot_hand_tucked: Pose,
    /// Where the object rests before pickup.
    pub object_home: Pose,
    /// Where the robot presents the object to the human.
    pub holdout_pose: Pose,
    pub human_hand_home: Pose,
    pub head_home: HeadAttitude,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            radii: BodyRadii::default(),
            sensors: SensorGeometry::default(),
            torso_lower: Pose::new(0.0, 0.0, 0.90),
            torso_upper: Pose::new(0.0, 0.0, 1.25),
            robot_hand_home: Pose::new(0.22, 0.0, 0.95),
            robot_hand_tucked: Pose::new(0.15, 0.0, 0.95),
            object_home: Pose::new(0.55, 0.25, 0.95),
            holdout_pose: Pose::new(0.60, 0.0, 1.05),
            human_hand_home: Pose::new(1.30, 0.0, 1.00),
            head_home: HeadAttitude::new(0.30, 1.10, 0.0),
        }
    }
}

/// One sensor classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SensorClass {
    Ok,
    NotOk,
}

impl SensorClass {
    pub fn from_bool(ok: bool) -> Self {
        if ok { SensorClass::Ok } else { SensorClass::NotOk }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, SensorClass::Ok)
    }
}

/// The gaze/pressure/location triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GplReading {
    pub gaze: SensorClass,
    pub pressure: SensorClass,
    pub location: SensorClass,
}

impl GplReading {
    pub fn all_ok(&self) -> bool {
        self.gaze.is_ok() && self.pressure.is_ok() && self.location.is_ok()
    }
}

/// Full world snapshot at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    /// Completed ticks since the run started; wall time is `tick * 0.05 s`.
    pub tick: u64,
    pub robot_hand: Pose,
    /// Hand displacement of the last step divided by the tick length, m/s.
    pub robot_hand_speed: f64,
    pub human_hand: Pose,
    pub head: HeadAttitude,
    pub object: Pose,
    pub gripper: Gripper,
    pub object_held_by: Holder,
    pub pressure_applied: bool,
}

impl WorldState {
    pub fn time_seconds(&self) -> f64 {
        self.tick as f64 * TICK_SECONDS
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("conflicting commands for actor {0:?} in one step")]
    ConflictingCommands(Actor),
}

/// The world proper: a snapshot plus the scene config and per-tick
/// bookkeeping used for the sensing "settled" gate.
#[derive(Debug, Clone)]
pub struct World {
    config: WorldConfig,
    state: WorldState,
    human_moved_last_step: bool,
    pressure_written_last_step: bool,
}

impl World {
    pub fn new(config: WorldConfig) -> Self {
        let state = WorldState {
            tick: 0,
            robot_hand: config.robot_hand_home,
            robot_hand_speed: 0.0,
            human_hand: config.human_hand_home,
            head: config.head_home,
            object: config.object_home,
            gripper: Gripper::Open,
            object_held_by: Holder::None,
            pressure_applied: false,
        };
        Self {
            config,
            state,
            human_moved_last_step: false,
            pressure_written_last_step: false,
        }
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    /// Advance one tick. Each commanded actor moves toward its target by
    /// `min(speed * Δt, remaining)`, uncommanded actors hold. `pressure`
    /// writes the human intent flag; any write counts as human activity
    /// this tick even if the value is unchanged.
    pub fn step(
        &mut self,
        commands: &[MotionCommand],
        pressure: Option<bool>,
    ) -> Result<(), StepError> {
        for (i, c) in commands.iter().enumerate() {
            if commands[..i].iter().any(|p| p.actor == c.actor) {
                return Err(StepError::ConflictingCommands(c.actor));
            }
        }

        let prev_hand = self.state.robot_hand;
        let prev_human = self.state.human_hand;
        let prev_head = self.state.head;

        for cmd in commands {
            let step_len = cmd.speed * TICK_SECONDS;
            match (cmd.actor, cmd.target) {
                (Actor::RobotHand, MotionTarget::Point(t)) => {
                    self.state.robot_hand = move_point(self.state.robot_hand, t, step_len);
                }
                (Actor::HumanHand, MotionTarget::Point(t)) => {
                    self.state.human_hand = move_point(self.state.human_hand, t, step_len);
                }
                (Actor::Head, MotionTarget::Attitude(t)) => {
                    self.state.head = move_attitude(self.state.head, t, step_len);
                }
                (actor, _) => panic!("target kind does not match actor {actor:?}"),
            }
        }

        self.state.tick += 1;
        self.state.robot_hand_speed = prev_hand.distance(&self.state.robot_hand) / TICK_SECONDS;
        self.human_moved_last_step = prev_human.distance(&self.state.human_hand) > 0.0
            || attitude_distance(&prev_head, &self.state.head) > 0.0;
        self.pressure_written_last_step = pressure.is_some();
        if let Some(v) = pressure {
            self.state.pressure_applied = v;
        }

        // A held object rides on its holder's hand.
        match self.state.object_held_by {
            Holder::Robot | Holder::Both => self.state.object = self.state.robot_hand,
            Holder::Human => self.state.object = self.state.human_hand,
            Holder::None => {}
        }
        Ok(())
    }

    /// Closes the gripper; grabs the object when the hand is in contact
    /// with it.
    pub fn close_gripper(&mut self) {
        self.state.gripper = Gripper::Closed;
        if self.min_distance(Body::RobotHand, Body::Object) == 0.0 {
            self.state.object_held_by = Holder::Robot;
            self.state.object = self.state.robot_hand;
        }
    }

    /// Opens the gripper; a held object passes to the human when their hand
    /// is within the location radius, otherwise it is simply let go.
    pub fn open_gripper(&mut self) {
        self.state.gripper = Gripper::Open;
        if matches!(self.state.object_held_by, Holder::Robot | Holder::Both) {
            let gap = self.min_distance(Body::HumanHand, Body::Object);
            self.state.object_held_by = if gap <= self.config.sensors.location_ok_radius {
                Holder::Human
            } else {
                Holder::None
            };
        }
    }

    /// True when the human side did nothing observable during the last step:
    /// no hand or head displacement and no pressure write.
    pub fn human_quiescent(&self) -> bool {
        !self.human_moved_last_step && !self.pressure_written_last_step
    }

    pub fn body_center(&self, body: Body) -> Pose {
        body_center(&self.config, &self.state, body)
    }

    /// Surface gap between two catalog bodies, floored at zero.
    pub fn min_distance(&self, a: Body, b: Body) -> f64 {
        min_distance(&self.config, &self.state, a, b)
    }

    /// Classifies the three handover sensors on the current state.
    pub fn sense_gpl(&self) -> GplReading {
        sense_gpl(&self.config, &self.state)
    }
}

fn move_point(from: Pose, to: Pose, step_len: f64) -> Pose {
    let remaining = from.distance(&to);
    if remaining <= step_len {
        return to;
    }
    let f = step_len / remaining;
    Pose {
        x: from.x + (to.x - from.x) * f,
        y: from.y + (to.y - from.y) * f,
        z: from.z + (to.z - from.z) * f,
    }
}

fn move_attitude(from: HeadAttitude, to: HeadAttitude, step_len: f64) -> HeadAttitude {
    let remaining = attitude_distance(&from, &to);
    if remaining <= step_len {
        return to;
    }
    let f = step_len / remaining;
    HeadAttitude {
        offset: from.offset + (to.offset - from.offset) * f,
        distance: from.distance + (to.distance - from.distance) * f,
        angle: normalize_angle(from.angle + angle_delta(from.angle, to.angle) * f),
    }
}

/// Head world position derived from its attitude around the object.
pub fn head_world_pose(object: &Pose, head: &HeadAttitude) -> Pose {
    let rad = head.angle.to_radians();
    Pose {
        x: object.x + head.distance * rad.cos(),
        y: object.y + head.distance * rad.sin(),
        z: object.z + head.offset,
    }
}

/// Body center lookup shared by the world and the checker side, so monitors
/// can recompute geometry straight from snapshots.
pub fn body_center(config: &WorldConfig, state: &WorldState, body: Body) -> Pose {
    match body {
        Body::RobotHand => state.robot_hand,
        Body::HumanHand => state.human_hand,
        Body::Head => head_world_pose(&state.object, &state.head),
        Body::Object => state.object,
        Body::TorsoLower => config.torso_lower,
        Body::TorsoUpper => config.torso_upper,
    }
}

pub fn min_distance(config: &WorldConfig, state: &WorldState, a: Body, b: Body) -> f64 {
    let ca = body_center(config, state, a);
    let cb = body_center(config, state, b);
    let gap = ca.distance(&cb) - (config.radii.radius(a) + config.radii.radius(b));
    gap.max(0.0)
}

pub fn sense_gpl(config: &WorldConfig, state: &WorldState) -> GplReading {
    let s = &config.sensors;
    let h = &state.head;
    let gaze_ok = h.offset >= s.gaze_offset[0]
        && h.offset <= s.gaze_offset[1]
        && h.distance >= s.gaze_distance[0]
        && h.distance <= s.gaze_distance[1]
        && h.angle >= s.gaze_angle[0]
        && h.angle < s.gaze_angle[1];
    let hand_gap = min_distance(config, state, Body::HumanHand, Body::Object);
    let location_ok = hand_gap <= s.location_ok_radius;
    let pressure_ok = state.pressure_applied && location_ok;
    GplReading {
        gaze: SensorClass::from_bool(gaze_ok),
        pressure: SensorClass::from_bool(pressure_ok),
        location: SensorClass::from_bool(location_ok),
    }
}
