//! The abstract test language: ordered human/environment actions with
//! unbound parameters, plus its line-oriented text form.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sut::{HumanSignal, RobotSignal};

/// Maximum number of actions in one abstract test.
pub const MAX_TEST_LEN: usize = 64;

/// Sensor channels the human can steer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SensorChannel {
    Gaze,
    Pressure,
    Location,
}

impl SensorChannel {
    pub fn param_name(&self) -> &'static str {
        match self {
            SensorChannel::Gaze => "hgazeOk",
            SensorChannel::Pressure => "hpressureOk",
            SensorChannel::Location => "hlocationOk",
        }
    }
}

/// One abstract human action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbstractAction {
    /// Assert a voice signal toward the robot for its bound duration.
    SendSignal(HumanSignal),
    /// Wait (up to a bound limit) for a robot-emitted signal.
    ReceiveSignal(RobotSignal),
    /// Idle for the given number of ticks.
    SetTime(u32),
    /// Steer one sensor channel into (true) or out of (false) its Ok region.
    SetSensor(SensorChannel, bool),
    /// Abandon the handover: move away and stop responding.
    Disengage,
}

/// How an abstract test came to be.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Unconstrained,
    Constrained,
    ModelBased { target: String },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Unconstrained => write!(f, "unconstrained"),
            Provenance::Constrained => write!(f, "constrained"),
            Provenance::ModelBased { target } => write!(f, "model-based:{target}"),
        }
    }
}

/// An ordered, non-empty action sequence for the human actor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractTest {
    pub id: String,
    pub provenance: Provenance,
    pub actions: Vec<AbstractAction>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TestFormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("test is empty")]
    Empty,
    #[error("test has {0} actions, limit is {MAX_TEST_LEN}")]
    TooLong(usize),
}

impl AbstractTest {
    pub fn new(
        id: impl Into<String>,
        provenance: Provenance,
        actions: Vec<AbstractAction>,
    ) -> Result<Self, TestFormatError> {
        if actions.is_empty() {
            return Err(TestFormatError::Empty);
        }
        if actions.len() > MAX_TEST_LEN {
            return Err(TestFormatError::TooLong(actions.len()));
        }
        Ok(Self {
            id: id.into(),
            provenance,
            actions,
        })
    }

    /// Renders the test in the one-action-per-line text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# test {} provenance={}\n", self.id, self.provenance));
        for a in &self.actions {
            out.push_str(&action_line(a));
            out.push('\n');
        }
        out
    }

    /// Parses the text form produced by [`AbstractTest::to_text`].
    pub fn from_text(text: &str) -> Result<Self, TestFormatError> {
        let mut id = String::from("unnamed");
        let mut provenance = Provenance::Unconstrained;
        let mut actions = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(spec) = rest.strip_prefix("test ") {
                    let mut parts = spec.split_whitespace();
                    if let Some(name) = parts.next() {
                        id = name.to_string();
                    }
                    for p in parts {
                        if let Some(v) = p.strip_prefix("provenance=") {
                            provenance = parse_provenance(v);
                        }
                    }
                }
                continue;
            }
            actions.push(parse_action_line(line, line_no)?);
        }
        AbstractTest::new(id, provenance, actions)
    }
}

fn parse_provenance(v: &str) -> Provenance {
    match v {
        "unconstrained" => Provenance::Unconstrained,
        "constrained" => Provenance::Constrained,
        other => match other.strip_prefix("model-based:") {
            Some(target) => Provenance::ModelBased {
                target: target.to_string(),
            },
            None => Provenance::Unconstrained,
        },
    }
}

fn action_line(a: &AbstractAction) -> String {
    match a {
        AbstractAction::SendSignal(s) => format!("sendsignal {}", s.wire_name()),
        AbstractAction::ReceiveSignal(s) => format!("receivesignal {}", s.wire_name()),
        AbstractAction::SetTime(n) => format!("setparam time = {n}"),
        AbstractAction::SetSensor(ch, v) => format!("setparam {} = {v}", ch.param_name()),
        AbstractAction::Disengage => "disengage".to_string(),
    }
}

fn parse_action_line(line: &str, line_no: usize) -> Result<AbstractAction, TestFormatError> {
    let err = |message: String| TestFormatError::Parse {
        line: line_no,
        message,
    };
    let mut words = line.split_whitespace();
    let verb = words.next().unwrap_or_default();
    match verb {
        "sendsignal" => {
            let name = words.next().ok_or_else(|| err("missing signal name".into()))?;
            match name {
                "activateRobot" => Ok(AbstractAction::SendSignal(HumanSignal::ActivateRobot)),
                "humanIsReady" => Ok(AbstractAction::SendSignal(HumanSignal::HumanIsReady)),
                other => Err(err(format!("unknown human signal `{other}`"))),
            }
        }
        "receivesignal" => {
            let name = words.next().ok_or_else(|| err("missing signal name".into()))?;
            match name {
                "informHumanOfHandoverStart" => Ok(AbstractAction::ReceiveSignal(
                    RobotSignal::InformHumanOfHandoverStart,
                )),
                other => Err(err(format!("unknown robot signal `{other}`"))),
            }
        }
        "setparam" => {
            let name = words.next().ok_or_else(|| err("missing parameter".into()))?;
            let eq = words.next();
            let value = words.next();
            if eq != Some("=") || value.is_none() {
                return Err(err("expected `setparam <name> = <value>`".into()));
            }
            let value = value.unwrap();
            match name {
                "time" => value
                    .parse::<u32>()
                    .map(AbstractAction::SetTime)
                    .map_err(|_| err(format!("bad tick count `{value}`"))),
                "hgazeOk" | "hpressureOk" | "hlocationOk" => {
                    let ch = match name {
                        "hgazeOk" => SensorChannel::Gaze,
                        "hpressureOk" => SensorChannel::Pressure,
                        _ => SensorChannel::Location,
                    };
                    value
                        .parse::<bool>()
                        .map(|v| AbstractAction::SetSensor(ch, v))
                        .map_err(|_| err(format!("bad boolean `{value}`")))
                }
                other => Err(err(format!("unknown parameter `{other}`"))),
            }
        }
        "disengage" => Ok(AbstractAction::Disengage),
        other => Err(err(format!("unknown action `{other}`"))),
    }
}
