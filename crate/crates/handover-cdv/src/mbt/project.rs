//! Witness-to-test projection and targeted test generation.
//!
//! A witness is a path over the product of the protocol automata; projected
//! onto the human's actions it becomes an abstract test: robot edges are
//! dropped, except emissions the human was waiting on, which become
//! receive actions.

use thiserror::Error;

use super::automaton::{FiringDetail, ReplayError, UpdateAtom};
use super::check::{CheckConfig, CheckError, CheckOutcome, Property, PropertyKind, WitnessTrace, check};
use super::protocol::ProtocolModel;
use crate::rng::derive_seed;
use crate::stimulus::{
    AbstractAction, AbstractTest, CatalogError, ConcreteTest, Profile, Provenance, RangeCatalog,
    SensorChannel, TestFormatError, concretize,
};
use crate::sut::{HumanSignal, RobotSignal};
use crate::world::WorldConfig;

#[derive(Debug, Error)]
pub enum MbtError {
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Format(#[from] TestFormatError),
    #[error("target `{0}` is not a reachability property")]
    NotReach(String),
}

/// Projects a witness onto the human's actions. Consecutive delays become
/// one wait action; the order of human events is preserved.
pub fn witness_to_abstract_test(
    model: &ProtocolModel,
    witness: &WitnessTrace,
    id: &str,
    target: &str,
) -> Result<AbstractTest, MbtError> {
    let (_, details) = model.network.replay(&witness.steps)?;

    let mut actions: Vec<AbstractAction> = Vec::new();
    let mut pending_delay = 0u32;
    let flush = |actions: &mut Vec<AbstractAction>, pending: &mut u32| {
        if *pending > 0 {
            actions.push(AbstractAction::SetTime(*pending));
            *pending = 0;
        }
    };

    for detail in &details {
        match detail {
            FiringDetail::Delay => pending_delay += 1,
            FiringDetail::Internal { .. } => {}
            FiringDetail::Synchronization { channel, emitter, receivers } => {
                let (emit_aut, emit_edge) = *emitter;
                if emit_aut == model.human {
                    flush(&mut actions, &mut pending_delay);
                    let ch = *channel;
                    if ch == model.channels.activate {
                        actions.push(AbstractAction::SendSignal(HumanSignal::ActivateRobot));
                    } else if ch == model.channels.ready {
                        actions.push(AbstractAction::SendSignal(HumanSignal::HumanIsReady));
                    } else if ch == model.channels.set_gpl {
                        let edge = &model.network.automata[model.human].edges[emit_edge];
                        let mut bits = [false; 3];
                        for u in &edge.updates {
                            if let UpdateAtom::SetVar(v, val) = u {
                                if *v == model.vars.gaze {
                                    bits[0] = *val == 1;
                                } else if *v == model.vars.pressure {
                                    bits[1] = *val == 1;
                                } else if *v == model.vars.location {
                                    bits[2] = *val == 1;
                                }
                            }
                        }
                        actions.push(AbstractAction::SetSensor(SensorChannel::Gaze, bits[0]));
                        actions.push(AbstractAction::SetSensor(SensorChannel::Pressure, bits[1]));
                        actions.push(AbstractAction::SetSensor(SensorChannel::Location, bits[2]));
                    } else if ch == model.channels.disengage {
                        actions.push(AbstractAction::Disengage);
                    }
                } else if receivers.iter().any(|(aut, _)| *aut == model.human)
                    && *channel == model.channels.inform
                {
                    flush(&mut actions, &mut pending_delay);
                    actions.push(AbstractAction::ReceiveSignal(
                        RobotSignal::InformHumanOfHandoverStart,
                    ));
                }
            }
        }
    }
    flush(&mut actions, &mut pending_delay);

    // A witness with no human involvement projects to pure waiting.
    if actions.is_empty() {
        actions.push(AbstractAction::SetTime(1));
    }

    Ok(AbstractTest::new(
        id,
        Provenance::ModelBased { target: target.to_string() },
        actions,
    )?)
}

/// Outcome of targeted generation over a set of reachability properties.
#[derive(Debug, Clone)]
pub struct TargetedGeneration {
    pub abstract_tests: Vec<AbstractTest>,
    pub tests: Vec<ConcreteTest>,
    /// Targets the checker exhaustively disproved; no tests are emitted
    /// for them.
    pub unreachable: Vec<String>,
}

/// For each reachable target: one abstract test via check-and-project, then
/// `concretizations` seeded samplings under the given profile.
#[allow(clippy::too_many_arguments)]
pub fn generate_targeted(
    model: &ProtocolModel,
    targets: &[Property],
    concretizations: u32,
    profile: Profile,
    catalog: &RangeCatalog,
    world: &WorldConfig,
    master_seed: u64,
    check_config: &CheckConfig,
) -> Result<TargetedGeneration, MbtError> {
    let mut out = TargetedGeneration {
        abstract_tests: Vec::new(),
        tests: Vec::new(),
        unreachable: Vec::new(),
    };
    for (ti, target) in targets.iter().enumerate() {
        if target.kind != PropertyKind::Reach {
            return Err(MbtError::NotReach(target.name.clone()));
        }
        let report = check(&model.network, target, check_config)?;
        let witness = match report.outcome {
            CheckOutcome::Reachable(w) => w,
            CheckOutcome::NotReachable => {
                out.unreachable.push(target.name.clone());
                continue;
            }
            CheckOutcome::SafeHolds | CheckOutcome::SafeViolated(_) => {
                return Err(MbtError::NotReach(target.name.clone()));
            }
        };
        let id = format!("mb-{ti:02}");
        let abstract_test = witness_to_abstract_test(model, &witness, &id, &target.name)?;
        let target_seed = derive_seed(master_seed, ti as u64);
        for k in 0..concretizations {
            let seed = derive_seed(target_seed, k as u64);
            out.tests
                .push(concretize(&abstract_test, catalog, world, seed, profile)?);
        }
        out.abstract_tests.push(abstract_test);
    }
    Ok(out)
}
