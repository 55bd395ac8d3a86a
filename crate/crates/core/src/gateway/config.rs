use std::fmt;

use serde::{Deserialize, Serialize};

use crate::behaviors::BehaviorConfig;
use crate::broker::validate_topic;
use crate::emg::{TrainConfig, DEFAULT_COMMAND_SPEED};
use crate::gaze::DwellConfig;
use crate::robot::{KinematicParams, Kinematics};
use crate::ssvep::{EegParams, StimulusTable, REGION_COUNT};
use crate::tracking::{Obstacle, TrackerConfig};
use crate::world::{FieldConfig, Point, Pose};

use super::script::{Action, ScriptEvent};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub theta: f64,
}

impl RobotSpec {
    pub fn new(id: u32, x: f64, y: f64) -> Self {
        Self { id, x, y, theta: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    #[default]
    Headless,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsvepBlock {
    pub eeg: EegParams,
    pub softmax_beta: f64,
}

impl Default for SsvepBlock {
    fn default() -> Self {
        Self { eeg: EegParams::default(), softmax_beta: crate::ssvep::DEFAULT_SOFTMAX_BETA }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmgBlock {
    /// Pre-trained model file; when absent a model is trained at start-up.
    pub model: Option<String>,
    pub train_per_class: usize,
    pub train: TrainConfig,
    pub debounce: usize,
    pub speed: f64,
}

impl Default for EmgBlock {
    fn default() -> Self {
        Self {
            model: None,
            train_per_class: 100,
            train: TrainConfig::default(),
            debounce: 5,
            speed: DEFAULT_COMMAND_SPEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GazeBlock {
    pub dwell: DwellConfig,
    pub rate: f64,
    pub tremor_sigma: f64,
}

impl Default for GazeBlock {
    fn default() -> Self {
        Self {
            dwell: DwellConfig::default(),
            rate: crate::gaze::DEFAULT_RATE,
            tremor_sigma: crate::gaze::DEFAULT_TREMOR_SIGMA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub field: FieldConfig,
    pub robots: Vec<RobotSpec>,
    pub obstacles: Vec<Obstacle>,
    pub tick_rate: f64,
    pub robot_radius: f64,
    pub kinematics: KinematicParams,
    pub tracker: TrackerConfig,
    pub behavior: BehaviorConfig,
    pub ssvep: SsvepBlock,
    pub emg: EmgBlock,
    pub gaze: GazeBlock,
    pub seed: u64,
    pub mode: RunMode,
    /// Default run length in seconds of simulated time.
    pub duration: f64,
    pub script: Vec<ScriptEvent>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            field: FieldConfig::default(),
            robots: Vec::new(),
            obstacles: Vec::new(),
            tick_rate: 50.0,
            robot_radius: 0.022,
            kinematics: KinematicParams::default(),
            tracker: TrackerConfig::default(),
            behavior: BehaviorConfig::default(),
            ssvep: SsvepBlock::default(),
            emg: EmgBlock::default(),
            gaze: GazeBlock::default(),
            seed: 0,
            mode: RunMode::Headless,
            duration: 10.0,
            script: Vec::new(),
        }
    }
}

/// Every problem found in a config, in a stable order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid scenario ({} problem{}):",
            self.violations.len(),
            if self.violations.len() == 1 { "" } else { "s" }
        )?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError { violations: vec![format!("parse error: {e}")] })
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.tick_rate
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut v = Vec::new();
        let field_ok = match self.field.validate() {
            Ok(()) => true,
            Err(e) => {
                v.push(format!("field: {e}"));
                false
            }
        };
        if !positive(self.tick_rate) {
            v.push(format!("tick_rate must be > 0, got {}", self.tick_rate));
        }
        if !positive(self.robot_radius) {
            v.push(format!("robot_radius must be > 0, got {}", self.robot_radius));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            v.push(format!("duration must be >= 0, got {}", self.duration));
        }
        if let Err(e) = Kinematics::new(self.kinematics) {
            v.push(format!("kinematics: {e}"));
        }
        if let Err(e) = self.tracker.validate() {
            v.push(format!("tracker: {e}"));
        }
        if let Err(e) = self.behavior.validate(self.robot_radius) {
            v.push(format!("behavior: {e}"));
        }

        if self.robots.is_empty() {
            v.push("robots: at least one robot is required".into());
        }
        let mut ids: Vec<u32> = self.robots.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        for w in ids.windows(2) {
            if w[0] == w[1] {
                v.push(format!("robots: duplicate id {}", w[0]));
            }
        }
        for r in &self.robots {
            if Pose::new(r.x, r.y, r.theta).is_err() {
                v.push(format!("robot {}: start pose must be finite", r.id));
            } else if field_ok && !self.field.contains_with_margin(Point::new(r.x, r.y)) {
                v.push(format!("robot {}: start ({}, {}) is outside the field minus its margin", r.id, r.x, r.y));
            }
        }
        for (i, a) in self.robots.iter().enumerate() {
            for b in &self.robots[i + 1..] {
                let d = Point::new(a.x, a.y).distance(Point::new(b.x, b.y));
                if d < self.behavior.min_separation {
                    v.push(format!(
                        "robots {} and {} start {d:.4} m apart, closer than min_separation {}",
                        a.id, b.id, self.behavior.min_separation
                    ));
                }
            }
        }
        for o in &self.obstacles {
            if !(positive(o.width) && positive(o.height)) {
                v.push(format!("obstacle {}: width and height must be > 0", o.id));
            }
            if field_ok && !self.field.contains(Point::new(o.x, o.y)) {
                v.push(format!("obstacle {}: center is outside the field", o.id));
            }
            if field_ok && (o.width > self.field.width || o.height > self.field.height) {
                v.push(format!("obstacle {}: larger than the field", o.id));
            }
        }

        let eeg = &self.ssvep.eeg;
        if eeg.channels == 0 || eeg.harmonics == 0 || !positive(eeg.fs) {
            v.push("ssvep.eeg: channels, harmonics and fs must be > 0".into());
        } else {
            let top = StimulusTable::default().frequencies().iter().copied().fold(0.0, f64::max);
            if top * eeg.harmonics as f64 >= eeg.fs / 2.0 {
                v.push(format!("ssvep.eeg: {} harmonics of {top} Hz exceed Nyquist at fs {}", eeg.harmonics, eeg.fs));
            }
        }
        if !(eeg.duration.is_finite() && eeg.duration >= 1.0) {
            v.push(format!("ssvep.eeg.duration must be >= 1 s, got {}", eeg.duration));
        }
        if !positive(self.ssvep.softmax_beta) {
            v.push("ssvep.softmax_beta must be > 0".into());
        }

        let emg = &self.emg;
        if emg.debounce == 0 {
            v.push("emg.debounce must be >= 1".into());
        }
        if !positive(emg.speed) {
            v.push("emg.speed must be > 0".into());
        }
        if emg.model.is_none() && emg.train_per_class < 20 {
            v.push(format!("emg.train_per_class must be >= 20, got {}", emg.train_per_class));
        }
        if emg.train.hidden == 0 || emg.train.batch_size == 0 || !positive(emg.train.learning_rate) {
            v.push("emg.train: hidden, batch_size and learning_rate must be > 0".into());
        }

        let g = &self.gaze;
        if !(positive(g.dwell.radius) && positive(g.dwell.hold) && g.dwell.refractory >= 0.0) {
            v.push("gaze.dwell: radius and hold must be > 0, refractory >= 0".into());
        }
        if !(0.0..1.0).contains(&g.dwell.max_invalid_fraction) {
            v.push("gaze.dwell.max_invalid_fraction must be in [0, 1)".into());
        }
        if !positive(g.rate) || !(g.tremor_sigma.is_finite() && g.tremor_sigma >= 0.0) {
            v.push("gaze: rate must be > 0 and tremor_sigma >= 0".into());
        }

        for (i, e) in self.script.iter().enumerate() {
            for problem in self.check_event(e) {
                v.push(format!("script[{i}]: {problem}"));
            }
        }

        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations: v })
        }
    }

    fn check_event(&self, e: &ScriptEvent) -> Vec<String> {
        let mut v = Vec::new();
        if !(e.t.is_finite() && e.t >= 0.0) {
            v.push(format!("time must be >= 0, got {}", e.t));
        }
        let inside = |p: Point, what: &str, v: &mut Vec<String>| {
            if !(p.is_finite() && self.field.contains(p)) {
                v.push(format!("{what} ({}, {}) is outside the field", p.x, p.y));
            }
        };
        match &e.action {
            Action::SsvepEpoch { region, snr } => {
                if !(1..=REGION_COUNT).contains(region) {
                    v.push(format!("region must be in 1..={REGION_COUNT}, got {region}"));
                }
                if !(snr.is_finite() && *snr >= 0.0) {
                    v.push(format!("snr must be >= 0, got {snr}"));
                }
            }
            Action::Gesture { .. } | Action::Idle => {}
            Action::Target { x, y } => inside(Point::new(*x, *y), "target", &mut v),
            Action::Touch { x, y, duration, .. } => {
                inside(Point::new(*x, *y), "touch", &mut v);
                if !positive(*duration) {
                    v.push("touch duration must be > 0".into());
                }
            }
            Action::GazeFixate { x, y, duration } => {
                inside(Point::new(*x, *y), "gaze point", &mut v);
                if !positive(*duration) {
                    v.push("gaze duration must be > 0".into());
                }
            }
            Action::GazeTrace { shape, duration, .. } => {
                if !positive(*duration) {
                    v.push("gaze duration must be > 0".into());
                }
                for (k, p) in shape.probe_points().into_iter().enumerate() {
                    inside(p, &format!("gaze shape point {k}"), &mut v);
                }
            }
            Action::Publish { topic, .. } => {
                if let Err(err) = validate_topic(topic) {
                    v.push(err.to_string());
                }
            }
        }
        v
    }
}
