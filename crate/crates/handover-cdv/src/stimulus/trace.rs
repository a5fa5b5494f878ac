//! Timestamped record of one simulation run, serialized as JSON lines.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sut::{HumanSignal, Location, RobotSignal, RunOutcome};
use crate::world::WorldState;

/// One observable event inside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEvent {
    /// The human started asserting a voice signal.
    SignalAsserted { signal: HumanSignal, duration_ticks: u32 },
    /// The robot emitted a signal.
    SignalEmitted { signal: RobotSignal },
    /// The human committed to a sensor configuration (recorded when a run
    /// of consecutive sensor actions begins enactment).
    HumanIntent { gaze: bool, pressure: bool, location: bool },
    /// The human began disengaging from the task.
    DisengageStarted,
    /// World snapshot at the end of the tick.
    Snapshot { state: WorldState },
    /// The controller entered a new FSM location.
    FsmEntered { location: Location },
    /// One instrumented statement executed.
    StatementHit { statement_id: u32, location: Location },
    /// The controller committed to its terminal outcome.
    Outcome { outcome: RunOutcome },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u64,
    #[serde(flatten)]
    pub event: TraceEvent,
}

/// Metadata identifying the run a trace belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TraceMeta {
    pub test_id: String,
    pub seed: u64,
    pub profile: String,
    /// Effective decision threshold of the run, ticks (after overrides).
    pub sensing_timeout_ticks: u32,
}

/// Event log of one run: tick-ordered, one snapshot per tick, at most one
/// outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace records out of tick order at index {0}")]
    OutOfOrder(usize),
    #[error("trace holds more than one outcome")]
    DuplicateOutcome,
    #[error("trace is missing a snapshot for tick {0}")]
    MissingSnapshot(u64),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimTrace {
    pub fn new(meta: TraceMeta) -> Self {
        Self {
            meta,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, tick: u64, event: TraceEvent) {
        debug_assert!(self.records.last().is_none_or(|r| r.tick <= tick));
        self.records.push(TraceRecord { tick, event });
    }

    pub fn outcome(&self) -> Option<(u64, RunOutcome)> {
        self.records.iter().find_map(|r| match r.event {
            TraceEvent::Outcome { outcome } => Some((r.tick, outcome)),
            _ => None,
        })
    }

    /// A run is conclusive when the controller committed to an outcome.
    pub fn is_conclusive(&self) -> bool {
        self.outcome().is_some()
    }

    pub fn last_tick(&self) -> Option<u64> {
        self.records.last().map(|r| r.tick)
    }

    /// Structural checks: tick order, outcome uniqueness, snapshot per tick.
    pub fn validate(&self) -> Result<(), TraceError> {
        let mut outcomes = 0;
        let mut last = 0u64;
        for (i, r) in self.records.iter().enumerate() {
            if r.tick < last {
                return Err(TraceError::OutOfOrder(i));
            }
            last = r.tick;
            if matches!(r.event, TraceEvent::Outcome { .. }) {
                outcomes += 1;
            }
        }
        if outcomes > 1 {
            return Err(TraceError::DuplicateOutcome);
        }
        if let Some(end) = self.last_tick() {
            let mut expected = 0u64;
            for r in &self.records {
                if matches!(r.event, TraceEvent::Snapshot { .. }) {
                    if r.tick != expected {
                        return Err(TraceError::MissingSnapshot(expected));
                    }
                    expected += 1;
                }
            }
            if expected <= end {
                return Err(TraceError::MissingSnapshot(expected));
            }
        }
        Ok(())
    }

    /// Writes the trace as JSON lines: one meta line, then one event per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), TraceError> {
        let meta = serde_json::to_string(&MetaLine { meta: &self.meta })
            .expect("trace meta serializes");
        writeln!(w, "{meta}")?;
        for r in &self.records {
            let line = serde_json::to_string(r).expect("trace record serializes");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("jsonl is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, TraceError> {
        let mut meta = TraceMeta::default();
        let mut records = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if idx == 0
                && let Ok(m) = serde_json::from_str::<MetaLineOwned>(&line)
            {
                meta = m.meta;
                continue;
            }
            let rec: TraceRecord =
                serde_json::from_str(&line).map_err(|source| TraceError::Json {
                    line: idx + 1,
                    source,
                })?;
            records.push(rec);
        }
        Ok(Self { meta, records })
    }
}

#[derive(Serialize)]
struct MetaLine<'a> {
    meta: &'a TraceMeta,
}

#[derive(Deserialize)]
struct MetaLineOwned {
    meta: TraceMeta,
}
