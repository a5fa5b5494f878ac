//! The checker: eleven automata-based assertion monitors consuming trace
//! records in tick order, one per requirement.
//!
//! Every monitor yields NotCovered, Passed or Failed for its run. A single
//! violation fails the monitor for the whole run.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimulus::{SimTrace, TraceEvent, TraceRecord, TraceSink};
use crate::sut::{Location, RunOutcome};
use crate::world::{Body, Gripper, WorldConfig, WorldState, min_distance};

/// Speed threshold the safety requirements compare against, m/s. A speed at
/// or above it violates "less than 250 mm/s".
pub const SPEED_LIMIT: f64 = 0.25;

/// Hand-to-hand center distance below which closing the gripper is unsafe.
pub const GRIPPER_CLEARANCE: f64 = 0.05;

/// Proximity at which the reduced-speed zone around the human begins.
pub const HUMAN_PROXIMITY: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RequirementId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8a,
    R8b,
    R8c,
    R8d,
}

impl RequirementId {
    pub const ALL: [RequirementId; 11] = [
        RequirementId::R1,
        RequirementId::R2,
        RequirementId::R3,
        RequirementId::R4,
        RequirementId::R5,
        RequirementId::R6,
        RequirementId::R7,
        RequirementId::R8a,
        RequirementId::R8b,
        RequirementId::R8c,
        RequirementId::R8d,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RequirementId::R1 => "R1",
            RequirementId::R2 => "R2",
            RequirementId::R3 => "R3",
            RequirementId::R4 => "R4",
            RequirementId::R5 => "R5",
            RequirementId::R6 => "R6",
            RequirementId::R7 => "R7",
            RequirementId::R8a => "R8a",
            RequirementId::R8b => "R8b",
            RequirementId::R8c => "R8c",
            RequirementId::R8d => "R8d",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictState {
    NotCovered,
    Passed,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorVerdict {
    #[serde(rename = "req")]
    pub requirement: RequirementId,
    pub state: VerdictState,
    pub trigger_tick: Option<u64>,
}

impl MonitorVerdict {
    pub fn covered(&self) -> bool {
        self.state != VerdictState::NotCovered
    }
}

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("trace records fed out of tick order ({prev} then {next})")]
    OutOfOrder { prev: u64, next: u64 },
}

/// Sticky per-requirement verdict accumulator.
#[derive(Debug, Clone, Copy)]
struct Cell {
    trigger_tick: Option<u64>,
    failed: bool,
}

impl Cell {
    const fn new() -> Self {
        Self {
            trigger_tick: None,
            failed: false,
        }
    }

    fn trigger(&mut self, tick: u64) {
        if self.trigger_tick.is_none() {
            self.trigger_tick = Some(tick);
        }
    }

    fn fail(&mut self, tick: u64) {
        self.trigger(tick);
        self.failed = true;
    }

    fn verdict(&self, req: RequirementId, pass_when_triggered: bool) -> MonitorVerdict {
        let state = match (self.trigger_tick, self.failed) {
            (None, _) => VerdictState::NotCovered,
            (Some(_), true) => VerdictState::Failed,
            (Some(_), false) => {
                if pass_when_triggered {
                    VerdictState::Passed
                } else {
                    VerdictState::Failed
                }
            }
        };
        MonitorVerdict {
            requirement: req,
            state,
            trigger_tick: self.trigger_tick,
        }
    }
}

/// The eleven monitors plus the shared scan state they observe.
#[derive(Debug)]
pub struct MonitorSet {
    world: WorldConfig,
    sensing_timeout: u32,
    error: Option<MonitorError>,
    last_tick: Option<u64>,

    prev_snapshot: Option<WorldState>,
    cur_snapshot: Option<WorldState>,
    first_motion_tick: Option<u64>,
    outcome: Option<(u64, RunOutcome)>,

    r1: Cell,
    r1_release_ok: bool,
    r2: Cell,
    r2_not_released_ok: bool,
    r3: Cell,
    r3_sensing_entry: Option<u64>,
    r3_exited_in_time: bool,
    r4: Cell,
    r5: Cell,
    r6: Cell,
    r6_window_open: bool,
    r7: Cell,
    r8a: Cell,
    r8b: Cell,
    r8c: Cell,
    r8d: Cell,
}

impl MonitorSet {
    pub fn new(world: WorldConfig, sensing_timeout: u32) -> Self {
        Self {
            world,
            sensing_timeout,
            error: None,
            last_tick: None,
            prev_snapshot: None,
            cur_snapshot: None,
            first_motion_tick: None,
            outcome: None,
            r1: Cell::new(),
            r1_release_ok: false,
            r2: Cell::new(),
            r2_not_released_ok: false,
            r3: Cell::new(),
            r3_sensing_entry: None,
            r3_exited_in_time: false,
            r4: Cell::new(),
            r5: Cell::new(),
            r6: Cell::new(),
            r6_window_open: false,
            r7: Cell::new(),
            r8a: Cell::new(),
            r8b: Cell::new(),
            r8c: Cell::new(),
            r8d: Cell::new(),
        }
    }

    fn gap(&self, state: &WorldState, a: Body, b: Body) -> f64 {
        min_distance(&self.world, state, a, b)
    }

    fn on_snapshot(&mut self, tick: u64, state: &WorldState) {
        let speed = state.robot_hand_speed;
        let speeding = speed >= SPEED_LIMIT;

        if self.first_motion_tick.is_none() && speed > 0.0 {
            self.first_motion_tick = Some(tick);
            self.r6.trigger(tick);
            self.r6_window_open = true;
            self.r8a.trigger(tick);
        }

        // R6: restricted speed from first motion until the next location
        // change.
        if self.r6_window_open && speeding {
            self.r6.fail(tick);
        }

        // R8a: the hand speed stays below the limit on every tick.
        if self.r8a.trigger_tick.is_some() && speeding {
            self.r8a.fail(tick);
        }

        // R5: closing the gripper with the human hand too close.
        let closed_now = state.gripper == Gripper::Closed
            && self
                .prev_snapshot
                .as_ref()
                .is_none_or(|p| p.gripper == Gripper::Open);
        if closed_now {
            self.r5.trigger(tick);
            let hand_centers = crate::world::body_center(&self.world, state, Body::RobotHand)
                .distance(&crate::world::body_center(&self.world, state, Body::HumanHand));
            if hand_centers < GRIPPER_CLEARANCE {
                self.r5.fail(tick);
            }
        }

        // R7: robot self-overlap.
        let self_pairs = [
            (Body::RobotHand, Body::TorsoLower),
            (Body::RobotHand, Body::TorsoUpper),
            (Body::TorsoLower, Body::TorsoUpper),
        ];
        if self_pairs.iter().any(|(a, b)| self.gap(state, *a, *b) == 0.0) {
            self.r7.trigger(tick);
            if speeding {
                self.r7.fail(tick);
            }
        }

        // R8b: reduced speed within 10 cm of the human.
        let near_human = Body::HUMAN
            .iter()
            .any(|h| self.gap(state, Body::RobotHand, *h) <= HUMAN_PROXIMITY);
        if near_human {
            self.r8b.trigger(tick);
            if speeding {
                self.r8b.fail(tick);
            }
        }

        // R8c / R8d: robot contact with anything / with the human.
        let mut robot_contact = self_pairs.iter().any(|(a, b)| self.gap(state, *a, *b) == 0.0);
        let mut human_contact = false;
        for r in Body::ROBOT {
            for other in Body::ALL {
                if Body::ROBOT.contains(&other) {
                    continue;
                }
                if self.gap(state, r, other) == 0.0 {
                    robot_contact = true;
                    if Body::HUMAN.contains(&other) {
                        human_contact = true;
                    }
                }
            }
        }
        if robot_contact {
            self.r8c.trigger(tick);
            if speeding {
                self.r8c.fail(tick);
            }
        }
        if human_contact {
            self.r8d.trigger(tick);
            if speeding {
                self.r8d.fail(tick);
            }
        }
    }

    fn on_fsm_entered(&mut self, tick: u64, location: Location) {
        // R6 window closes at the first location change at or after the
        // first motion tick (the snapshot of this tick was already checked).
        if self.r6_window_open {
            self.r6_window_open = false;
        }

        match location {
            Location::Deciding => {
                // Sensing completed on this tick; the latched reading equals
                // the classification of the current snapshot.
                if let Some(state) = &self.cur_snapshot {
                    let gpl = crate::world::sense_gpl(&self.world, state);
                    if gpl.all_ok() {
                        self.r1.trigger(tick);
                    } else {
                        self.r2.trigger(tick);
                    }
                }
                if let Some(entry) = self.r3_sensing_entry.take() {
                    self.r3_exited_in_time = tick - entry <= self.sensing_timeout as u64 + 1;
                }
            }
            Location::Sensing => {
                self.r3.trigger(tick);
                self.r3_sensing_entry = Some(tick);
            }
            Location::TimedOutEnd => {
                if let Some(entry) = self.r3_sensing_entry.take() {
                    self.r3_exited_in_time = tick - entry <= self.sensing_timeout as u64 + 1;
                }
            }
            _ => {}
        }
    }

    /// Consumes one record. Records must arrive in tick order.
    pub fn feed_record(&mut self, record: &TraceRecord) {
        if self.error.is_some() {
            return;
        }
        if let Some(prev) = self.last_tick
            && record.tick < prev
        {
            self.error = Some(MonitorError::OutOfOrder {
                prev,
                next: record.tick,
            });
            return;
        }
        self.last_tick = Some(record.tick);

        match &record.event {
            TraceEvent::Snapshot { state } => {
                self.prev_snapshot = self.cur_snapshot.take();
                self.cur_snapshot = Some(state.clone());
                self.on_snapshot(record.tick, &state.clone());
            }
            TraceEvent::FsmEntered { location } => self.on_fsm_entered(record.tick, *location),
            TraceEvent::Outcome { outcome } => {
                self.outcome = Some((record.tick, *outcome));
                self.r1_release_ok = *outcome == RunOutcome::Released;
                self.r2_not_released_ok = *outcome == RunOutcome::NotReleased;
            }
            _ => {}
        }
    }

    /// Run-end verdicts, one per requirement in `RequirementId::ALL` order.
    pub fn into_verdicts(mut self) -> Result<Vec<MonitorVerdict>, MonitorError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        // R4 triggers at run end; inconclusive runs leave it uncovered.
        if let Some((tick, _)) = self.outcome {
            self.r4.trigger(tick);
        }
        // R3: still inside sensing at run end means no decision in time.
        if self.r3_sensing_entry.is_some() {
            self.r3_exited_in_time = false;
        }
        Ok(vec![
            self.r1.verdict(RequirementId::R1, self.r1_release_ok),
            self.r2.verdict(RequirementId::R2, self.r2_not_released_ok),
            self.r3.verdict(RequirementId::R3, self.r3_exited_in_time),
            self.r4.verdict(RequirementId::R4, true),
            self.r5.verdict(RequirementId::R5, true),
            self.r6.verdict(RequirementId::R6, true),
            self.r7.verdict(RequirementId::R7, true),
            self.r8a.verdict(RequirementId::R8a, true),
            self.r8b.verdict(RequirementId::R8b, true),
            self.r8c.verdict(RequirementId::R8c, true),
            self.r8d.verdict(RequirementId::R8d, true),
        ])
    }
}

impl TraceSink for MonitorSet {
    fn feed(&mut self, record: &TraceRecord) {
        self.feed_record(record);
    }
}

/// Re-checks a finished trace (the offline path used by coverage tooling
/// and oracle comparisons).
pub fn verdicts_for_trace(
    trace: &SimTrace,
    world: &WorldConfig,
) -> Result<Vec<MonitorVerdict>, MonitorError> {
    let mut set = MonitorSet::new(world.clone(), trace.meta.sensing_timeout_ticks);
    for r in &trace.records {
        set.feed_record(r);
    }
    set.into_verdicts()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus::{SimTrace, TraceMeta};
    use crate::world::{Gripper, HeadAttitude, Holder, Pose};

    fn base_state(tick: u64) -> WorldState {
        WorldState {
            tick,
            robot_hand: Pose::new(0.22, 0.0, 0.95),
            robot_hand_speed: 0.0,
            human_hand: Pose::new(1.3, 0.0, 1.0),
            head: HeadAttitude::new(0.3, 1.1, 0.0),
            object: Pose::new(0.55, 0.25, 0.95),
            gripper: Gripper::Open,
            object_held_by: Holder::None,
            pressure_applied: false,
        }
    }

    fn trace_of(records: Vec<(u64, TraceEvent)>) -> SimTrace {
        let mut t = SimTrace::new(TraceMeta {
            sensing_timeout_ticks: 600,
            ..TraceMeta::default()
        });
        for (tick, ev) in records {
            t.push(tick, ev);
        }
        t
    }

    fn verdict(vs: &[MonitorVerdict], req: RequirementId) -> MonitorVerdict {
        vs[req.index()]
    }

    #[test]
    fn empty_trace_leaves_everything_not_covered() {
        let t = trace_of(vec![]);
        let vs = verdicts_for_trace(&t, &WorldConfig::default()).unwrap();
        assert_eq!(vs.len(), 11);
        for v in &vs {
            assert_eq!(v.state, VerdictState::NotCovered, "{:?}", v.requirement);
        }
    }

    #[test]
    fn gripper_close_with_hand_too_near_fails_r5() {
        let mut near = base_state(1);
        near.gripper = Gripper::Closed;
        near.human_hand = Pose::new(
            near.robot_hand.x + 0.03,
            near.robot_hand.y,
            near.robot_hand.z,
        );
        let t = trace_of(vec![
            (0, TraceEvent::Snapshot { state: base_state(0) }),
            (1, TraceEvent::Snapshot { state: near }),
        ]);
        let vs = verdicts_for_trace(&t, &WorldConfig::default()).unwrap();
        assert_eq!(verdict(&vs, RequirementId::R5).state, VerdictState::Failed);
        assert_eq!(verdict(&vs, RequirementId::R5).trigger_tick, Some(1));
    }

    #[test]
    fn gripper_close_with_clearance_passes_r5() {
        let mut s = base_state(1);
        s.gripper = Gripper::Closed;
        let t = trace_of(vec![
            (0, TraceEvent::Snapshot { state: base_state(0) }),
            (1, TraceEvent::Snapshot { state: s }),
        ]);
        let vs = verdicts_for_trace(&t, &WorldConfig::default()).unwrap();
        assert_eq!(verdict(&vs, RequirementId::R5).state, VerdictState::Passed);
    }

    #[test]
    fn no_gripper_close_leaves_r5_not_covered() {
        let t = trace_of(vec![(0, TraceEvent::Snapshot { state: base_state(0) })]);
        let vs = verdicts_for_trace(&t, &WorldConfig::default()).unwrap();
        assert_eq!(verdict(&vs, RequirementId::R5).state, VerdictState::NotCovered);
    }

    #[test]
    fn fast_motion_fails_r8a_slow_passes() {
        let mut fast = base_state(1);
        fast.robot_hand_speed = 0.4;
        let t = trace_of(vec![
            (0, TraceEvent::Snapshot { state: base_state(0) }),
            (1, TraceEvent::Snapshot { state: fast }),
        ]);
        let vs = verdicts_for_trace(&t, &WorldConfig::default()).unwrap();
        assert_eq!(verdict(&vs, RequirementId::R8a).state, VerdictState::Failed);

        let mut slow = base_state(1);
        slow.robot_hand_speed = 0.2;
        let t = trace_of(vec![
            (0, TraceEvent::Snapshot { state: base_state(0) }),
            (1, TraceEvent::Snapshot { state: slow }),
        ]);
        let vs = verdicts_for_trace(&t, &WorldConfig::default()).unwrap();
        assert_eq!(verdict(&vs, RequirementId::R8a).state, VerdictState::Passed);
    }

    #[test]
    fn speed_exactly_at_threshold_fails() {
        let mut s = base_state(1);
        s.robot_hand_speed = SPEED_LIMIT;
        let t = trace_of(vec![
            (0, TraceEvent::Snapshot { state: base_state(0) }),
            (1, TraceEvent::Snapshot { state: s }),
        ]);
        let vs = verdicts_for_trace(&t, &WorldConfig::default()).unwrap();
        assert_eq!(verdict(&vs, RequirementId::R8a).state, VerdictState::Failed);
    }

    #[test]
    fn r1_passes_on_release_after_all_ok_sensing() {
        // Snapshot classifying all-Ok: head in the gaze box, hand at the
        // object, pressure applied.
        let mut ok = base_state(2);
        ok.head = HeadAttitude::new(0.15, 0.55, 20.0);
        ok.human_hand = ok.object;
        ok.pressure_applied = true;

        let t = trace_of(vec![
            (0, TraceEvent::Snapshot { state: base_state(0) }),
            (1, TraceEvent::Snapshot { state: base_state(1) }),
            (1, TraceEvent::FsmEntered { location: Location::Sensing }),
            (2, TraceEvent::Snapshot { state: ok }),
            (2, TraceEvent::FsmEntered { location: Location::Deciding }),
            (3, TraceEvent::Outcome { outcome: RunOutcome::Released }),
        ]);
        let vs = verdicts_for_trace(&t, &WorldConfig::default()).unwrap();
        assert_eq!(verdict(&vs, RequirementId::R1).state, VerdictState::Passed);
        assert_eq!(verdict(&vs, RequirementId::R2).state, VerdictState::NotCovered);
        assert_eq!(verdict(&vs, RequirementId::R3).state, VerdictState::Passed);
        assert_eq!(verdict(&vs, RequirementId::R4).state, VerdictState::Passed);
    }

    #[test]
    fn r2_covers_not_ok_sensing_and_fails_on_release() {
        let t = trace_of(vec![
            (0, TraceEvent::Snapshot { state: base_state(0) }),
            (1, TraceEvent::Snapshot { state: base_state(1) }),
            (1, TraceEvent::FsmEntered { location: Location::Sensing }),
            (2, TraceEvent::Snapshot { state: base_state(2) }),
            (2, TraceEvent::FsmEntered { location: Location::Deciding }),
            (3, TraceEvent::Outcome { outcome: RunOutcome::Released }),
        ]);
        let vs = verdicts_for_trace(&t, &WorldConfig::default()).unwrap();
        assert_eq!(verdict(&vs, RequirementId::R2).state, VerdictState::Failed);
        assert_eq!(verdict(&vs, RequirementId::R1).state, VerdictState::NotCovered);
    }

    #[test]
    fn sensing_overstay_fails_r3() {
        let mut records = Vec::new();
        for tick in 0..10u64 {
            records.push(TraceRecord { tick, event: TraceEvent::Snapshot { state: base_state(tick) } });
            if tick == 1 {
                records.push(TraceRecord { tick, event: TraceEvent::FsmEntered { location: Location::Sensing } });
            }
            if tick == 7 {
                // Exit 6 ticks after entry: beyond timeout + 1 = 4.
                records.push(TraceRecord { tick, event: TraceEvent::FsmEntered { location: Location::Deciding } });
            }
            if tick == 8 {
                records.push(TraceRecord { tick, event: TraceEvent::Outcome { outcome: RunOutcome::NotReleased } });
            }
        }
        let t = SimTrace {
            meta: TraceMeta { sensing_timeout_ticks: 3, ..TraceMeta::default() },
            records,
        };
        let vs = verdicts_for_trace(&t, &WorldConfig::default()).unwrap();
        assert_eq!(verdict(&vs, RequirementId::R3).state, VerdictState::Failed);
    }

    #[test]
    fn out_of_order_records_are_an_integrity_error() {
        let t = SimTrace {
            meta: TraceMeta::default(),
            records: vec![
                TraceRecord { tick: 5, event: TraceEvent::Snapshot { state: base_state(5) } },
                TraceRecord { tick: 2, event: TraceEvent::Snapshot { state: base_state(2) } },
            ],
        };
        assert!(verdicts_for_trace(&t, &WorldConfig::default()).is_err());
    }

    #[test]
    fn exactly_eleven_verdicts_in_fixed_order() {
        let t = trace_of(vec![(0, TraceEvent::Snapshot { state: base_state(0) })]);
        let vs = verdicts_for_trace(&t, &WorldConfig::default()).unwrap();
        let ids: Vec<RequirementId> = vs.iter().map(|v| v.requirement).collect();
        assert_eq!(ids, RequirementId::ALL.to_vec());
    }
}
