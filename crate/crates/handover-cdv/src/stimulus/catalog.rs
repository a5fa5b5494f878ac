//! Classified numeric ranges used to concretize abstract tests, plus the
//! concretizer itself.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::actions::{AbstractAction, AbstractTest, SensorChannel};
use crate::rng::SeededRng;
use crate::sut::{HumanSignal, TimeoutOverrides};
use crate::world::{HeadAttitude, Pose, WorldConfig};

/// Inclusive numeric interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty interval {lo}..{hi}");
        Self { lo, hi }
    }

    fn sample(&self, rng: &mut SeededRng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.range_f64(self.lo, self.hi)
        }
    }
}

/// Inclusive integer interval, ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickRange {
    pub lo: u32,
    pub hi: u32,
}

impl TickRange {
    pub fn new(lo: u32, hi: u32) -> Self {
        assert!(lo <= hi, "empty tick range {lo}..{hi}");
        Self { lo, hi }
    }

    fn sample(&self, rng: &mut SeededRng) -> u32 {
        rng.range_u32(self.lo, self.hi)
    }

    /// The lower quartile of the range, used by the short-timeouts profile.
    pub fn lower_quartile(&self) -> TickRange {
        TickRange::new(self.lo, self.lo + (self.hi - self.lo) / 4)
    }
}

/// Attitude sampling box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttitudeBox {
    pub offset: Interval,
    pub distance: Interval,
    pub angle: Interval,
}

impl AttitudeBox {
    fn sample(&self, rng: &mut SeededRng) -> HeadAttitude {
        HeadAttitude::new(
            self.offset.sample(rng),
            self.distance.sample(rng),
            self.angle.sample(rng),
        )
    }
}

/// Classified ranges for every parameter a test can bind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeCatalog {
    /// Voice signal assertion durations, ticks.
    pub activate_duration: TickRange,
    pub ready_duration: TickRange,
    /// Default wait bound for receive actions, ticks.
    pub receive_max_wait: TickRange,
    /// Human hand speed and head attitude speed, m/s equivalents.
    pub human_speed: f64,
    /// Head targets inside / outside the gaze-Ok box.
    pub gaze_ok: AttitudeBox,
    pub gaze_not_ok: AttitudeBox,
    /// Hand-to-object center distance for location enactment, metres.
    pub location_ok_center_distance: Interval,
    pub location_not_ok_center_distance: Interval,
    /// Robot timeout override ranges, ticks (sampled by the short profile).
    pub timeout_wait_activation: TickRange,
    pub timeout_wait_ready: TickRange,
    pub timeout_sensing: TickRange,
    /// Simulator ticks per abstract time unit.
    pub time_scale: TickRange,
    /// Parking targets for disengagement.
    pub disengage_hand: Pose,
    pub disengage_head: HeadAttitude,
}

impl Default for RangeCatalog {
    fn default() -> Self {
        Self {
            activate_duration: TickRange::new(100, 100),
            ready_duration: TickRange::new(40, 40),
            receive_max_wait: TickRange::new(1200, 1200),
            human_speed: 1.0,
            gaze_ok: AttitudeBox {
                offset: Interval::new(0.1, 0.2),
                distance: Interval::new(0.5, 0.6),
                angle: Interval::new(15.0, 40.0),
            },
            gaze_not_ok: AttitudeBox {
                offset: Interval::new(0.25, 0.40),
                distance: Interval::new(0.9, 1.4),
                angle: Interval::new(60.0, 170.0),
            },
            location_ok_center_distance: Interval::new(0.04, 0.17),
            location_not_ok_center_distance: Interval::new(0.45, 0.90),
            timeout_wait_activation: TickRange::new(150, 1200),
            timeout_wait_ready: TickRange::new(150, 1200),
            timeout_sensing: TickRange::new(4, 400),
            time_scale: TickRange::new(1, 1),
            disengage_hand: Pose::new(1.70, 0.40, 1.05),
            disengage_head: HeadAttitude::new(0.45, 1.60, 80.0),
        }
    }
}

impl RangeCatalog {
    /// Checks the catalog against the world's classification geometry: every
    /// Ok sample must classify Ok and every NotOk sample must classify NotOk.
    pub fn validate(&self, world: &WorldConfig) -> Result<(), CatalogError> {
        let s = &world.sensors;
        let inside = |i: &Interval, b: &[f64; 2]| i.lo >= b[0] && i.hi <= b[1];
        if !(inside(&self.gaze_ok.offset, &s.gaze_offset)
            && inside(&self.gaze_ok.distance, &s.gaze_distance)
            && self.gaze_ok.angle.lo >= s.gaze_angle[0]
            && self.gaze_ok.angle.hi <= s.gaze_angle[1])
        {
            return Err(CatalogError::Inconsistent("gaze_ok box exceeds the Ok region".into()));
        }
        let outside = |i: &Interval, b: &[f64; 2]| i.hi < b[0] || i.lo > b[1];
        if !(outside(&self.gaze_not_ok.offset, &s.gaze_offset)
            || outside(&self.gaze_not_ok.distance, &s.gaze_distance)
            || self.gaze_not_ok.angle.lo >= s.gaze_angle[1]
            || self.gaze_not_ok.angle.hi < s.gaze_angle[0])
        {
            return Err(CatalogError::Inconsistent("gaze_not_ok box overlaps the Ok region".into()));
        }
        let hand_r = world.radii.human_hand + world.radii.object;
        if self.location_ok_center_distance.hi - hand_r > s.location_ok_radius {
            return Err(CatalogError::Inconsistent(
                "location_ok distance exceeds the Ok radius".into(),
            ));
        }
        if self.location_not_ok_center_distance.lo - hand_r <= s.location_ok_radius {
            return Err(CatalogError::Inconsistent(
                "location_not_ok distance reaches into the Ok radius".into(),
            ));
        }
        if self.human_speed <= 0.0 {
            return Err(CatalogError::Inconsistent("human speed must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CatalogError {
    #[error("no catalog entry for parameter `{0}`")]
    MissingEntry(String),
    #[error("catalog inconsistent with world geometry: {0}")]
    Inconsistent(String),
}

/// Concretization profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Profile {
    /// Robot timeouts stay at their configured defaults.
    #[default]
    Default,
    /// Robot timeouts are sampled from the lower quartile of their ranges,
    /// to steer runs into the timed-out outcomes.
    ShortTimeouts,
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::Default => "default",
            Profile::ShortTimeouts => "short-timeouts",
        }
    }
}

/// Numeric binding for one action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ActionBinding {
    Signal { duration_ticks: u32 },
    Receive { max_wait_ticks: u32 },
    Wait { ticks: u32 },
    HeadTarget { attitude: HeadAttitude },
    HandTarget { pose: Pose },
    PressureFlag { value: bool },
    DisengageTargets { hand: Pose, head: HeadAttitude },
}

/// An abstract test with every parameter bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteTest {
    pub abstract_test: AbstractTest,
    pub seed: u64,
    pub profile: Profile,
    pub bindings: Vec<ActionBinding>,
    pub robot_overrides: Option<TimeoutOverrides>,
}

/// Binds every parameter of `test` by seeded uniform sampling from the
/// catalog. Deterministic in `(test, catalog, seed, profile)`.
pub fn concretize(
    test: &AbstractTest,
    catalog: &RangeCatalog,
    world: &WorldConfig,
    seed: u64,
    profile: Profile,
) -> Result<ConcreteTest, CatalogError> {
    let mut rng = SeededRng::new(seed);
    let mut bindings = Vec::with_capacity(test.actions.len());
    for action in &test.actions {
        let binding = match action {
            AbstractAction::SendSignal(HumanSignal::ActivateRobot) => ActionBinding::Signal {
                duration_ticks: catalog.activate_duration.sample(&mut rng).max(1),
            },
            AbstractAction::SendSignal(HumanSignal::HumanIsReady) => ActionBinding::Signal {
                duration_ticks: catalog.ready_duration.sample(&mut rng).max(1),
            },
            AbstractAction::ReceiveSignal(_) => ActionBinding::Receive {
                max_wait_ticks: catalog.receive_max_wait.sample(&mut rng).max(1),
            },
            AbstractAction::SetTime(n) => {
                let scale = catalog.time_scale.sample(&mut rng).max(1);
                ActionBinding::Wait { ticks: n.saturating_mul(scale).max(1) }
            }
            AbstractAction::SetSensor(SensorChannel::Gaze, v) => ActionBinding::HeadTarget {
                attitude: if *v {
                    catalog.gaze_ok.sample(&mut rng)
                } else {
                    catalog.gaze_not_ok.sample(&mut rng)
                },
            },
            AbstractAction::SetSensor(SensorChannel::Pressure, v) => {
                ActionBinding::PressureFlag { value: *v }
            }
            AbstractAction::SetSensor(SensorChannel::Location, v) => {
                let d = if *v {
                    catalog.location_ok_center_distance.sample(&mut rng)
                } else {
                    catalog.location_not_ok_center_distance.sample(&mut rng)
                };
                // Direction sampled on the unit sphere around the object's
                // presentation pose.
                let z = rng.range_f64(-1.0, 1.0);
                let phi = rng.range_f64(0.0, std::f64::consts::TAU);
                let r = (1.0f64 - z * z).max(0.0).sqrt();
                let anchor = world.holdout_pose;
                ActionBinding::HandTarget {
                    pose: Pose::new(
                        anchor.x + d * r * phi.cos(),
                        anchor.y + d * r * phi.sin(),
                        anchor.z + d * z,
                    ),
                }
            }
            AbstractAction::Disengage => ActionBinding::DisengageTargets {
                hand: catalog.disengage_hand,
                head: catalog.disengage_head,
            },
        };
        bindings.push(binding);
    }

    let robot_overrides = match profile {
        Profile::Default => None,
        Profile::ShortTimeouts => Some(TimeoutOverrides {
            wait_activation: catalog
                .timeout_wait_activation
                .lower_quartile()
                .sample(&mut rng)
                .max(1),
            wait_ready: catalog.timeout_wait_ready.lower_quartile().sample(&mut rng).max(1),
            sensing: catalog.timeout_sensing.lower_quartile().sample(&mut rng).max(1),
        }),
    };

    Ok(ConcreteTest {
        abstract_test: test.clone(),
        seed,
        profile,
        bindings,
        robot_overrides,
    })
}

impl ConcreteTest {
    /// Text form: the abstract lines followed by a bindings block.
    pub fn to_text(&self) -> String {
        let mut out = self.abstract_test.to_text();
        out.push_str(&format!("[bindings seed={} profile={}]\n", self.seed, self.profile.name()));
        for (i, b) in self.bindings.iter().enumerate() {
            let line = match b {
                ActionBinding::Signal { duration_ticks } => {
                    format!("{i} duration_ticks = {duration_ticks}")
                }
                ActionBinding::Receive { max_wait_ticks } => {
                    format!("{i} max_wait_ticks = {max_wait_ticks}")
                }
                ActionBinding::Wait { ticks } => format!("{i} wait_ticks = {ticks}"),
                ActionBinding::HeadTarget { attitude } => format!(
                    "{i} head_target = {} {} {}",
                    attitude.offset, attitude.distance, attitude.angle
                ),
                ActionBinding::HandTarget { pose } => {
                    format!("{i} hand_target = {} {} {}", pose.x, pose.y, pose.z)
                }
                ActionBinding::PressureFlag { value } => format!("{i} pressure = {value}"),
                ActionBinding::DisengageTargets { hand, head } => format!(
                    "{i} disengage = {} {} {} / {} {} {}",
                    hand.x, hand.y, hand.z, head.offset, head.distance, head.angle
                ),
            };
            out.push_str(&line);
            out.push('\n');
        }
        if let Some(o) = &self.robot_overrides {
            out.push_str("[robot-overrides]\n");
            out.push_str(&format!("wait_activation_timeout = {}\n", o.wait_activation));
            out.push_str(&format!("wait_ready_timeout = {}\n", o.wait_ready));
            out.push_str(&format!("sensing_timeout = {}\n", o.sensing));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus::actions::Provenance;

    fn catalog() -> (RangeCatalog, WorldConfig) {
        (RangeCatalog::default(), WorldConfig::default())
    }

    fn test_of(actions: Vec<AbstractAction>) -> AbstractTest {
        AbstractTest::new("t", Provenance::Unconstrained, actions).unwrap()
    }

    #[test]
    fn default_catalog_is_consistent_with_default_world() {
        let (c, w) = catalog();
        c.validate(&w).unwrap();
    }

    #[test]
    fn gaze_ok_binding_lands_in_the_ok_box() {
        let (c, w) = catalog();
        let t = test_of(vec![AbstractAction::SetSensor(SensorChannel::Gaze, true)]);
        for seed in 0..200 {
            let ct = concretize(&t, &c, &w, seed, Profile::Default).unwrap();
            match ct.bindings[0] {
                ActionBinding::HeadTarget { attitude } => {
                    assert!((0.1..=0.2).contains(&attitude.offset));
                    assert!((0.5..=0.6).contains(&attitude.distance));
                    assert!((15.0..40.0).contains(&attitude.angle));
                }
                ref other => panic!("unexpected binding {other:?}"),
            }
        }
    }

    #[test]
    fn activate_signal_binds_five_seconds() {
        let (c, w) = catalog();
        let t = test_of(vec![AbstractAction::SendSignal(HumanSignal::ActivateRobot)]);
        let ct = concretize(&t, &c, &w, 1, Profile::Default).unwrap();
        assert_eq!(ct.bindings[0], ActionBinding::Signal { duration_ticks: 100 });
    }

    #[test]
    fn concretize_is_deterministic() {
        let (c, w) = catalog();
        let t = test_of(vec![
            AbstractAction::SetSensor(SensorChannel::Gaze, true),
            AbstractAction::SetSensor(SensorChannel::Location, true),
            AbstractAction::SetTime(7),
        ]);
        let a = concretize(&t, &c, &w, 99, Profile::ShortTimeouts).unwrap();
        let b = concretize(&t, &c, &w, 99, Profile::ShortTimeouts).unwrap();
        assert_eq!(a, b);
        let c2 = concretize(&t, &c, &w, 100, Profile::ShortTimeouts).unwrap();
        assert_ne!(a, c2);
    }

    #[test]
    fn short_profile_samples_lower_quartile_overrides() {
        let (c, w) = catalog();
        let t = test_of(vec![AbstractAction::SetTime(1)]);
        for seed in 0..100 {
            let ct = concretize(&t, &c, &w, seed, Profile::ShortTimeouts).unwrap();
            let o = ct.robot_overrides.unwrap();
            assert!(o.sensing >= 4 && o.sensing <= 4 + (400 - 4) / 4);
            assert!(o.wait_ready >= 150 && o.wait_ready <= 150 + (1200 - 150) / 4);
        }
        let ct = concretize(&t, &c, &w, 0, Profile::Default).unwrap();
        assert!(ct.robot_overrides.is_none());
    }

    #[test]
    fn location_ok_binding_is_within_reach_of_the_object() {
        let (c, w) = catalog();
        let t = test_of(vec![AbstractAction::SetSensor(SensorChannel::Location, true)]);
        for seed in 0..200 {
            let ct = concretize(&t, &c, &w, seed, Profile::Default).unwrap();
            match ct.bindings[0] {
                ActionBinding::HandTarget { pose } => {
                    let d = pose.distance(&w.holdout_pose);
                    assert!(d <= 0.17 + 1e-9, "sampled distance {d}");
                }
                ref other => panic!("unexpected binding {other:?}"),
            }
        }
    }

    #[test]
    fn inconsistent_catalog_rejected() {
        let (mut c, w) = catalog();
        c.gaze_ok.angle = Interval::new(15.0, 50.0);
        assert!(matches!(c.validate(&w), Err(CatalogError::Inconsistent(_))));
    }
}
