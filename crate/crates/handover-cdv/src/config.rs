//! Plain key-value campaign configuration files.
//!
//! One `key = value` pair per line, `#` comments. Every key has a default;
//! unknown keys and malformed values are reported with their line number.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimulus::{Interval, Profile, RangeCatalog, TickRange};
use crate::sut::{RobotConfig, SpeedProfile};
use crate::world::WorldConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    Unconstrained,
    Constrained,
    ModelBased,
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Unconstrained => "unconstrained",
            GeneratorKind::Constrained => "constrained",
            GeneratorKind::ModelBased => "model-based",
        }
    }
}

/// Which reachability targets a model-based campaign aims at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetsSpec {
    /// All 33 tuples; the checker drops the unreachable ones.
    AllTuples,
    /// The four requirement targets.
    Requirements,
    /// Explicit target names.
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub generator: Option<GeneratorKind>,
    pub count: u32,
    pub length_range: (u32, u32),
    pub master_seed: Option<u64>,
    pub targets: TargetsSpec,
    pub concretizations: u32,
    pub profile: Profile,
    pub jobs: usize,
    pub label: Option<String>,
    pub out_dir: PathBuf,
    /// Run budget override; zero means twice the sum of the timeouts.
    pub max_ticks: Option<u64>,
    pub robot: RobotConfig,
    pub world: WorldConfig,
    pub catalog: RangeCatalog,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            generator: None,
            count: 100,
            length_range: (4, 12),
            master_seed: None,
            targets: TargetsSpec::AllTuples,
            concretizations: 20,
            profile: Profile::Default,
            jobs: 1,
            label: None,
            out_dir: PathBuf::from("campaign_out"),
            max_ticks: None,
            robot: RobotConfig::default(),
            world: WorldConfig::default(),
            catalog: RangeCatalog::default(),
        }
    }
}

impl CampaignConfig {
    pub fn label(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => {
                let g = self.generator.map(|g| g.name()).unwrap_or("campaign");
                match self.profile {
                    Profile::Default => g.to_string(),
                    Profile::ShortTimeouts => format!("{g}-short"),
                }
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(String),
}

pub fn load_config(path: &Path) -> Result<CampaignConfig, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<CampaignConfig, ConfigError> {
    let mut cfg = CampaignConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::Line { line: line_no, message };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected `key = value`".into()))?;
        let key = key.trim();
        let value = value.trim();
        apply_key(&mut cfg, key, value).map_err(err)?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &CampaignConfig) -> Result<(), ConfigError> {
    cfg.robot.validate().map_err(ConfigError::Invalid)?;
    cfg.catalog
        .validate(&cfg.world)
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if cfg.length_range.0 < 1 || cfg.length_range.0 > cfg.length_range.1 {
        return Err(ConfigError::Invalid(format!(
            "length range {}..{} is invalid",
            cfg.length_range.0, cfg.length_range.1
        )));
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(value: &str, what: &str) -> Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("bad {what} `{value}`"))
}

fn parse_interval(value: &str) -> Result<Interval, String> {
    let (lo, hi) = value
        .split_once("..")
        .ok_or_else(|| format!("expected `lo..hi`, got `{value}`"))?;
    let lo: f64 = parse(lo.trim(), "number")?;
    let hi: f64 = parse(hi.trim(), "number")?;
    if lo > hi {
        return Err(format!("empty interval `{value}`"));
    }
    Ok(Interval::new(lo, hi))
}

fn parse_tick_range(value: &str) -> Result<TickRange, String> {
    let (lo, hi) = value
        .split_once("..")
        .ok_or_else(|| format!("expected `lo..hi`, got `{value}`"))?;
    let lo: u32 = parse(lo.trim(), "tick count")?;
    let hi: u32 = parse(hi.trim(), "tick count")?;
    if lo > hi {
        return Err(format!("empty range `{value}`"));
    }
    Ok(TickRange::new(lo, hi))
}

fn apply_key(cfg: &mut CampaignConfig, key: &str, value: &str) -> Result<(), String> {
    match key {
        "generator" => {
            cfg.generator = Some(match value {
                "unconstrained" => GeneratorKind::Unconstrained,
                "constrained" => GeneratorKind::Constrained,
                "model-based" => GeneratorKind::ModelBased,
                other => return Err(format!("unknown generator `{other}`")),
            })
        }
        "count" => cfg.count = parse(value, "count")?,
        "length_min" => cfg.length_range.0 = parse(value, "length")?,
        "length_max" => cfg.length_range.1 = parse(value, "length")?,
        "seed" => cfg.master_seed = Some(parse(value, "seed")?),
        "targets" | "target" => {
            cfg.targets = match value {
                "all-reachable-tuples" | "all-tuples" => TargetsSpec::AllTuples,
                "reqs1-4" | "requirements" => TargetsSpec::Requirements,
                list => TargetsSpec::List(
                    list.split(';').map(|s| s.trim().to_string()).collect(),
                ),
            }
        }
        "concretizations" => cfg.concretizations = parse(value, "count")?,
        "profile" => {
            cfg.profile = match value {
                "default" => Profile::Default,
                "short-timeouts" => Profile::ShortTimeouts,
                other => return Err(format!("unknown profile `{other}`")),
            }
        }
        "jobs" => cfg.jobs = parse(value, "job count")?,
        "label" => cfg.label = Some(value.to_string()),
        "out" => cfg.out_dir = PathBuf::from(value),
        "max_ticks" => {
            let n: u64 = parse(value, "tick count")?;
            cfg.max_ticks = if n == 0 { None } else { Some(n) };
        }
        "robot.speed_profile" => match value {
            "flawed" => {
                cfg.robot.speed_profile = SpeedProfile::Flawed;
                cfg.robot.pickup_speed = RobotConfig::flawed().pickup_speed;
                cfg.robot.handover_speed = RobotConfig::flawed().handover_speed;
            }
            "safe" => {
                cfg.robot.speed_profile = SpeedProfile::Safe;
                cfg.robot.pickup_speed = RobotConfig::safe().pickup_speed;
                cfg.robot.handover_speed = RobotConfig::safe().handover_speed;
            }
            other => return Err(format!("unknown speed profile `{other}`")),
        },
        "robot.pickup_speed" => cfg.robot.pickup_speed = parse(value, "speed")?,
        "robot.handover_speed" => cfg.robot.handover_speed = parse(value, "speed")?,
        "robot.wait_activation_timeout" => {
            cfg.robot.wait_activation_timeout = parse(value, "tick count")?
        }
        "robot.wait_ready_timeout" => cfg.robot.wait_ready_timeout = parse(value, "tick count")?,
        "robot.sensing_timeout" => cfg.robot.sensing_timeout = parse(value, "tick count")?,
        "world.location_ok_radius" => {
            cfg.world.sensors.location_ok_radius = parse(value, "distance")?
        }
        "world.gaze_offset" => {
            let i = parse_interval(value)?;
            cfg.world.sensors.gaze_offset = [i.lo, i.hi];
        }
        "world.gaze_distance" => {
            let i = parse_interval(value)?;
            cfg.world.sensors.gaze_distance = [i.lo, i.hi];
        }
        "world.gaze_angle" => {
            let i = parse_interval(value)?;
            cfg.world.sensors.gaze_angle = [i.lo, i.hi];
        }
        "world.radius.robot_hand" => cfg.world.radii.robot_hand = parse(value, "radius")?,
        "world.radius.human_hand" => cfg.world.radii.human_hand = parse(value, "radius")?,
        "world.radius.head" => cfg.world.radii.head = parse(value, "radius")?,
        "world.radius.object" => cfg.world.radii.object = parse(value, "radius")?,
        "world.radius.torso" => cfg.world.radii.torso = parse(value, "radius")?,
        "catalog.human_speed" => cfg.catalog.human_speed = parse(value, "speed")?,
        "catalog.activate_duration" => cfg.catalog.activate_duration = parse_tick_range(value)?,
        "catalog.ready_duration" => cfg.catalog.ready_duration = parse_tick_range(value)?,
        "catalog.receive_max_wait" => cfg.catalog.receive_max_wait = parse_tick_range(value)?,
        "catalog.gaze_ok.offset" => cfg.catalog.gaze_ok.offset = parse_interval(value)?,
        "catalog.gaze_ok.distance" => cfg.catalog.gaze_ok.distance = parse_interval(value)?,
        "catalog.gaze_ok.angle" => cfg.catalog.gaze_ok.angle = parse_interval(value)?,
        "catalog.gaze_not_ok.offset" => cfg.catalog.gaze_not_ok.offset = parse_interval(value)?,
        "catalog.gaze_not_ok.distance" => {
            cfg.catalog.gaze_not_ok.distance = parse_interval(value)?
        }
        "catalog.gaze_not_ok.angle" => cfg.catalog.gaze_not_ok.angle = parse_interval(value)?,
        "catalog.location_ok_distance" => {
            cfg.catalog.location_ok_center_distance = parse_interval(value)?
        }
        "catalog.location_not_ok_distance" => {
            cfg.catalog.location_not_ok_center_distance = parse_interval(value)?
        }
        "catalog.timeout.wait_activation" => {
            cfg.catalog.timeout_wait_activation = parse_tick_range(value)?
        }
        "catalog.timeout.wait_ready" => cfg.catalog.timeout_wait_ready = parse_tick_range(value)?,
        "catalog.timeout.sensing" => cfg.catalog.timeout_sensing = parse_tick_range(value)?,
        "catalog.time_scale" => cfg.catalog.time_scale = parse_tick_range(value)?,
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}
