//! Pseudorandom abstract-test generation, unconstrained and constrained.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{SeededRng, derive_seed};
use crate::stimulus::{AbstractAction, AbstractTest, MAX_TEST_LEN, Provenance, SensorChannel};
use crate::sut::{HumanSignal, RobotSignal};

/// Upper bound for randomly drawn wait times, ticks (60 s).
pub const MAX_RANDOM_WAIT_TICKS: u32 = 1200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintProfile {
    None,
    /// Every test starts with the activation handshake prefix.
    ForceActivation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub count: u32,
    pub length_range: (u32, u32),
    pub constraint_profile: ConstraintProfile,
}

impl GenConfig {
    pub fn unconstrained(seed: u64, count: u32) -> Self {
        Self {
            seed,
            count,
            length_range: (4, 12),
            constraint_profile: ConstraintProfile::None,
        }
    }

    pub fn constrained(seed: u64, count: u32) -> Self {
        Self {
            constraint_profile: ConstraintProfile::ForceActivation,
            ..Self::unconstrained(seed, count)
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("length range {0}..={1} is invalid (need 1 <= min <= max <= {MAX_TEST_LEN})")]
    BadLengthRange(u32, u32),
    #[error("count must be positive")]
    ZeroCount,
    #[error("constrained generation needs length_range.min >= 3 for the activation prefix")]
    PrefixDoesNotFit,
    #[error("config profile does not match the generator entry point")]
    ProfileMismatch,
}

fn validate(cfg: &GenConfig) -> Result<(), GenError> {
    let (lo, hi) = cfg.length_range;
    if lo < 1 || lo > hi || hi as usize > MAX_TEST_LEN {
        return Err(GenError::BadLengthRange(lo, hi));
    }
    if cfg.count == 0 {
        return Err(GenError::ZeroCount);
    }
    if cfg.constraint_profile == ConstraintProfile::ForceActivation && lo < 3 {
        return Err(GenError::PrefixDoesNotFit);
    }
    Ok(())
}

/// One uniform draw over the abstract action alphabet.
pub fn sample_action(rng: &mut SeededRng) -> AbstractAction {
    match rng.below(8) {
        0 => AbstractAction::SendSignal(HumanSignal::ActivateRobot),
        1 => AbstractAction::SendSignal(HumanSignal::HumanIsReady),
        2 => AbstractAction::ReceiveSignal(RobotSignal::InformHumanOfHandoverStart),
        3 => AbstractAction::SetTime(rng.range_u32(1, MAX_RANDOM_WAIT_TICKS)),
        4 => AbstractAction::SetSensor(SensorChannel::Gaze, rng.bool()),
        5 => AbstractAction::SetSensor(SensorChannel::Pressure, rng.bool()),
        6 => AbstractAction::SetSensor(SensorChannel::Location, rng.bool()),
        _ => AbstractAction::Disengage,
    }
}

fn gen_with_prefix(cfg: &GenConfig, prefix: &[AbstractAction], provenance_of: impl Fn(u32) -> Provenance) -> Vec<AbstractTest> {
    let (lo, hi) = cfg.length_range;
    (0..cfg.count)
        .map(|i| {
            let mut rng = SeededRng::new(derive_seed(cfg.seed, i as u64));
            let len = rng.range_u32(lo, hi) as usize;
            let mut actions = Vec::with_capacity(len);
            actions.extend_from_slice(prefix);
            while actions.len() < len {
                actions.push(sample_action(&mut rng));
            }
            AbstractTest::new(format!("{:04}", i), provenance_of(i), actions)
                .expect("generated within limits")
        })
        .collect()
}

/// Uniform sampling over the whole action alphabet, no protocol knowledge.
pub fn gen_unconstrained(cfg: &GenConfig) -> Result<Vec<AbstractTest>, GenError> {
    if cfg.constraint_profile != ConstraintProfile::None {
        return Err(GenError::ProfileMismatch);
    }
    validate(cfg)?;
    Ok(gen_with_prefix(cfg, &[], |_| Provenance::Unconstrained))
}

/// Like [`gen_unconstrained`], but every test starts by walking the robot
/// through activation: send the activation signal, wait for the announce,
/// signal readiness.
pub fn gen_constrained(cfg: &GenConfig) -> Result<Vec<AbstractTest>, GenError> {
    if cfg.constraint_profile != ConstraintProfile::ForceActivation {
        return Err(GenError::ProfileMismatch);
    }
    validate(cfg)?;
    let prefix = [
        AbstractAction::SendSignal(HumanSignal::ActivateRobot),
        AbstractAction::ReceiveSignal(RobotSignal::InformHumanOfHandoverStart),
        AbstractAction::SendSignal(HumanSignal::HumanIsReady),
    ];
    Ok(gen_with_prefix(cfg, &prefix, |_| Provenance::Constrained))
}
