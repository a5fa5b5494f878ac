//! Coverage collector: requirements coverage, cross-product coverage over
//! the human-event x robot-outcome space, and statement coverage, with
//! campaign-level merging.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::monitors::{MonitorVerdict, RequirementId, VerdictState};
use crate::stimulus::{SimTrace, TraceError, TraceEvent};
use crate::sut::{HumanSignal, Location, RunOutcome, StatementInfo};

/// What the human did in one run, at protocol granularity. Eleven values:
/// the two pre-sensing stages, eight sensor configurations, disengagement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HumanEvent {
    NotActive,
    ActivSignal,
    Gpl { gaze: bool, pressure: bool, location: bool },
    Disengaged,
}

impl fmt::Display for HumanEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HumanEvent::NotActive => write!(f, "NotActive"),
            HumanEvent::ActivSignal => write!(f, "ActivSignal"),
            HumanEvent::Gpl { gaze, pressure, location } => {
                let b = |v: &bool| if *v { '1' } else { '0' };
                write!(f, "GPL={}{}{}", b(gaze), b(pressure), b(location))
            }
            HumanEvent::Disengaged => write!(f, "Disengaged"),
        }
    }
}

/// One cell of the cross-product coverage space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrossTuple {
    pub human: HumanEvent,
    pub robot: RunOutcome,
}

impl fmt::Display for CrossTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}>", self.human, self.robot.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reachability {
    Reachable,
    Unreachable,
}

/// The 33-tuple universe in its canonical order, each tagged with whether a
/// functionally correct controller can reach it (20 can, 13 cannot).
pub fn tuple_universe() -> Vec<(CrossTuple, Reachability)> {
    let mut out = Vec::with_capacity(33);
    for human in human_events() {
        for robot in [RunOutcome::TimedOut, RunOutcome::Released, RunOutcome::NotReleased] {
            let t = CrossTuple { human, robot };
            out.push((t, expected_reachability(&t)));
        }
    }
    out
}

/// The eleven human events in canonical order.
pub fn human_events() -> Vec<HumanEvent> {
    let mut out = vec![HumanEvent::NotActive, HumanEvent::ActivSignal];
    for bits in 0..8u8 {
        out.push(HumanEvent::Gpl {
            gaze: bits & 4 != 0,
            pressure: bits & 2 != 0,
            location: bits & 1 != 0,
        });
    }
    out.push(HumanEvent::Disengaged);
    out
}

fn expected_reachability(t: &CrossTuple) -> Reachability {
    use RunOutcome::*;
    let unreachable = match (t.human, t.robot) {
        // The robot cannot decide anything without being walked through the
        // protocol first.
        (HumanEvent::NotActive, Released | NotReleased) => true,
        (HumanEvent::ActivSignal, Released | NotReleased) => true,
        // Correct code releases exactly on an all-ok reading.
        (HumanEvent::Gpl { gaze, pressure, location }, NotReleased) => {
            gaze && pressure && location
        }
        (HumanEvent::Gpl { gaze, pressure, location }, Released) => {
            !(gaze && pressure && location)
        }
        (HumanEvent::Disengaged, Released) => true,
        _ => false,
    };
    if unreachable {
        Reachability::Unreachable
    } else {
        Reachability::Reachable
    }
}

/// Index of a tuple within the canonical universe order.
pub fn tuple_index(t: &CrossTuple) -> usize {
    let human_idx = human_events()
        .iter()
        .position(|h| *h == t.human)
        .expect("human event in universe");
    let robot_idx = match t.robot {
        RunOutcome::TimedOut => 0,
        RunOutcome::Released => 1,
        RunOutcome::NotReleased => 2,
    };
    human_idx * 3 + robot_idx
}

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("statement id {0} is outside the statement table")]
    UnknownStatement(u32),
    #[error("reports built against different statement tables ({0} vs {1} statements)")]
    MismatchedTables(usize, usize),
}

/// Maps one conclusive trace onto its cross-product tuple; inconclusive
/// traces map to none.
///
/// The human event is the deepest protocol progress achieved: disengaging
/// before the robot's decision wins; otherwise the last sensor
/// configuration the human committed to before the decision, provided both
/// voice signals were asserted; otherwise the activation signal alone;
/// otherwise nothing.
pub fn classify_trace(trace: &SimTrace) -> Result<Option<CrossTuple>, CoverageError> {
    trace.validate()?;
    let Some((outcome_tick, outcome)) = trace.outcome() else {
        return Ok(None);
    };

    let mut activate = false;
    let mut ready = false;
    let mut disengaged_before_decision = false;
    let mut gpl = (false, false, false);
    for r in &trace.records {
        match &r.event {
            TraceEvent::SignalAsserted { signal: HumanSignal::ActivateRobot, .. } => {
                activate = true;
            }
            TraceEvent::SignalAsserted { signal: HumanSignal::HumanIsReady, .. } => {
                ready = true;
            }
            TraceEvent::DisengageStarted if r.tick < outcome_tick => {
                disengaged_before_decision = true;
            }
            TraceEvent::HumanIntent { gaze, pressure, location } if r.tick < outcome_tick => {
                gpl = (*gaze, *pressure, *location);
            }
            _ => {}
        }
    }

    let human = if activate && ready {
        if disengaged_before_decision {
            HumanEvent::Disengaged
        } else {
            HumanEvent::Gpl {
                gaze: gpl.0,
                pressure: gpl.1,
                location: gpl.2,
            }
        }
    } else if activate {
        HumanEvent::ActivSignal
    } else {
        HumanEvent::NotActive
    };

    Ok(Some(CrossTuple { human, robot: outcome }))
}

/// Per-requirement covered/passed/failed counters over a set of runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReqCounters {
    pub covered: u32,
    pub passed: u32,
    pub failed: u32,
}

impl ReqCounters {
    fn add_verdict(&mut self, v: &MonitorVerdict) {
        match v.state {
            VerdictState::NotCovered => {}
            VerdictState::Passed => {
                self.covered += 1;
                self.passed += 1;
            }
            VerdictState::Failed => {
                self.covered += 1;
                self.failed += 1;
            }
        }
    }
}

/// Campaign identification carried inside a report.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub label: String,
    pub generator: String,
    pub master_seed: u64,
    pub test_count: u32,
}

/// Merged coverage of a campaign (or of several).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub meta: ReportMeta,
    pub runs_total: u32,
    pub runs_conclusive: u32,
    /// One entry per requirement, `RequirementId::ALL` order.
    pub requirements: Vec<ReqCounters>,
    /// One hit counter per tuple, `tuple_universe` order.
    pub tuple_hits: Vec<u32>,
    /// One flag per statement id.
    pub statements_hit: Vec<bool>,
}

impl CoverageReport {
    pub fn empty(meta: ReportMeta, statement_count: usize) -> Self {
        Self {
            meta,
            runs_total: 0,
            runs_conclusive: 0,
            requirements: vec![ReqCounters::default(); RequirementId::ALL.len()],
            tuple_hits: vec![0; 33],
            statements_hit: vec![false; statement_count],
        }
    }

    /// Folds one run into the report.
    pub fn add_run(
        &mut self,
        verdicts: &[MonitorVerdict],
        tuple: Option<CrossTuple>,
        statement_ids: impl IntoIterator<Item = u32>,
    ) -> Result<(), CoverageError> {
        self.runs_total += 1;
        if let Some(t) = tuple {
            self.runs_conclusive += 1;
            self.tuple_hits[tuple_index(&t)] += 1;
        }
        for v in verdicts {
            self.requirements[v.requirement.index()].add_verdict(v);
        }
        for id in statement_ids {
            let slot = self
                .statements_hit
                .get_mut(id as usize)
                .ok_or(CoverageError::UnknownStatement(id))?;
            *slot = true;
        }
        Ok(())
    }

    pub fn requirement(&self, req: RequirementId) -> ReqCounters {
        self.requirements[req.index()]
    }

    pub fn tuple_hit_count(&self, t: &CrossTuple) -> u32 {
        self.tuple_hits[tuple_index(t)]
    }

    pub fn statements_hit_count(&self) -> usize {
        self.statements_hit.iter().filter(|h| **h).count()
    }
}

/// Statement coverage percentages per FSM block and overall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementCoverage {
    pub blocks: BTreeMap<String, BlockCoverage>,
    pub overall_hit: u32,
    pub overall_total: u32,
    pub overall_percent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockCoverage {
    pub hit: u32,
    pub total: u32,
    pub percent: f64,
}

fn percent(hit: u32, total: u32) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * hit as f64 / total as f64
    }
}

/// Computes per-location and overall statement coverage from a hit map.
pub fn stmt_coverage(
    table: &[StatementInfo],
    hits: &[bool],
) -> Result<StatementCoverage, CoverageError> {
    if hits.len() != table.len() {
        return Err(CoverageError::MismatchedTables(hits.len(), table.len()));
    }
    let mut per_block: BTreeMap<Location, (u32, u32)> = BTreeMap::new();
    for loc in Location::ALL {
        per_block.insert(loc, (0, 0));
    }
    let mut overall = (0u32, 0u32);
    for info in table {
        let hit = hits[info.statement_id as usize];
        let e = per_block.get_mut(&info.location).expect("all locations present");
        e.1 += 1;
        overall.1 += 1;
        if hit {
            e.0 += 1;
            overall.0 += 1;
        }
    }
    let blocks = per_block
        .into_iter()
        .map(|(loc, (hit, total))| {
            (
                loc.name().to_string(),
                BlockCoverage {
                    hit,
                    total,
                    percent: percent(hit, total),
                },
            )
        })
        .collect();
    Ok(StatementCoverage {
        blocks,
        overall_hit: overall.0,
        overall_total: overall.1,
        overall_percent: percent(overall.0, overall.1),
    })
}

/// Sums counters and unions statement hits across reports. All inputs must
/// come from the same statement table.
pub fn merge(reports: &[CoverageReport]) -> Result<CoverageReport, CoverageError> {
    let statement_count = reports
        .first()
        .map(|r| r.statements_hit.len())
        .unwrap_or_else(|| crate::sut::statement_count() as usize);
    let mut out = CoverageReport::empty(
        ReportMeta {
            label: "TOTAL".to_string(),
            generator: "merged".to_string(),
            master_seed: 0,
            test_count: reports.iter().map(|r| r.meta.test_count).sum(),
        },
        statement_count,
    );
    for r in reports {
        if r.statements_hit.len() != statement_count {
            return Err(CoverageError::MismatchedTables(
                r.statements_hit.len(),
                statement_count,
            ));
        }
        out.runs_total += r.runs_total;
        out.runs_conclusive += r.runs_conclusive;
        for (acc, x) in out.requirements.iter_mut().zip(&r.requirements) {
            acc.covered += x.covered;
            acc.passed += x.passed;
            acc.failed += x.failed;
        }
        for (acc, x) in out.tuple_hits.iter_mut().zip(&r.tuple_hits) {
            *acc += *x;
        }
        for (acc, x) in out.statements_hit.iter_mut().zip(&r.statements_hit) {
            *acc |= *x;
        }
    }
    Ok(out)
}
