//! Explicit-state breadth-first reachability and safety checking with
//! shortest-witness extraction.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::automaton::{AutomatonId, LocationId, Network, NetworkState, VarId, WitnessStep};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredAtom {
    AutomatonAt(AutomatonId, LocationId),
    AutomatonAtAny(AutomatonId, Vec<LocationId>),
    VarEq(VarId, i8),
}

/// Conjunction of atoms over one network state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct StatePredicate {
    pub atoms: Vec<PredAtom>,
}

impl StatePredicate {
    pub fn eval(&self, state: &NetworkState) -> bool {
        self.atoms.iter().all(|a| match a {
            PredAtom::AutomatonAt(aut, loc) => state.locations[*aut] as usize == *loc,
            PredAtom::AutomatonAtAny(aut, locs) => {
                locs.contains(&(state.locations[*aut] as usize))
            }
            PredAtom::VarEq(v, val) => state.vars[*v] == *val,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropertyKind {
    /// Some reachable state satisfies the predicate.
    Reach,
    /// Every reachable state satisfies the predicate.
    Safe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property {
    pub name: String,
    pub kind: PropertyKind,
    pub predicate: StatePredicate,
}

impl Property {
    pub fn reach(name: impl Into<String>, predicate: StatePredicate) -> Self {
        Self {
            name: name.into(),
            kind: PropertyKind::Reach,
            predicate,
        }
    }

    pub fn safe(name: impl Into<String>, predicate: StatePredicate) -> Self {
        Self {
            name: name.into(),
            kind: PropertyKind::Safe,
            predicate,
        }
    }
}

/// A step sequence from the initial state; replaying it is legal at every
/// step and its final state witnesses the property.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct WitnessTrace {
    pub steps: Vec<WitnessStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    /// Reach: holds, with a shortest witness.
    Reachable(WitnessTrace),
    /// Reach: exhaustively disproved.
    NotReachable,
    /// Safe: holds on every reachable state.
    SafeHolds,
    /// Safe: violated, with a shortest counterexample.
    SafeViolated(WitnessTrace),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub outcome: CheckOutcome,
    pub states_explored: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckConfig {
    /// Hard cap on distinct states; exceeding it is an error, never a
    /// wrong verdict.
    pub state_budget: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            state_budget: 10_000_000,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("state budget exhausted after {explored} states (budget {budget})")]
    BudgetExceeded { explored: usize, budget: usize },
}

/// Breadth-first exploration of the product graph. Reach returns the
/// shortest witness by step count, ties broken by the canonical successor
/// order (edges by automaton and index, then delay); Safe returns the
/// shortest counterexample the same way.
pub fn check(
    network: &Network,
    property: &Property,
    config: &CheckConfig,
) -> Result<CheckReport, CheckError> {
    let hit = |s: &NetworkState| match property.kind {
        PropertyKind::Reach => property.predicate.eval(s),
        PropertyKind::Safe => !property.predicate.eval(s),
    };
    let wrap = |witness: WitnessTrace, explored: usize| {
        let outcome = match property.kind {
            PropertyKind::Reach => CheckOutcome::Reachable(witness),
            PropertyKind::Safe => CheckOutcome::SafeViolated(witness),
        };
        CheckReport {
            outcome,
            states_explored: explored,
        }
    };

    // Arena of (state, parent index, step from parent) for path recovery.
    let initial = network.initial_state();
    if hit(&initial) {
        return Ok(wrap(WitnessTrace::default(), 1));
    }
    let mut arena: Vec<(NetworkState, usize, Option<WitnessStep>)> =
        vec![(initial.clone(), 0, None)];
    let mut seen: HashMap<NetworkState, usize> = HashMap::new();
    seen.insert(initial, 0);
    let mut frontier = 0usize;

    while frontier < arena.len() {
        let current = arena[frontier].0.clone();
        for (step, next) in network.successors(&current) {
            if seen.contains_key(&next) {
                continue;
            }
            if arena.len() >= config.state_budget {
                return Err(CheckError::BudgetExceeded {
                    explored: arena.len(),
                    budget: config.state_budget,
                });
            }
            let idx = arena.len();
            seen.insert(next.clone(), idx);
            let goal = hit(&next);
            arena.push((next, frontier, Some(step)));
            if goal {
                let mut steps = Vec::new();
                let mut at = idx;
                while let (_, parent, Some(s)) = &arena[at] {
                    steps.push(*s);
                    at = *parent;
                }
                steps.reverse();
                return Ok(wrap(WitnessTrace { steps }, arena.len()));
            }
        }
        frontier += 1;
    }

    let outcome = match property.kind {
        PropertyKind::Reach => CheckOutcome::NotReachable,
        PropertyKind::Safe => CheckOutcome::SafeHolds,
    };
    Ok(CheckReport {
        outcome,
        states_explored: arena.len(),
    })
}
