//! Topic names and JSON payload shapes. Everything except `tracking/tuio` is
//! JSON; UI messages are strictly typed and range-checked before they may enter
//! the broker.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::behaviors::BehaviorEvent;
use crate::emg::Gesture;
use crate::gaze::FittedPath;
use crate::ssvep::REGION_COUNT;

pub const SIM_TICK: &str = "sim/tick";
pub const SWARM_MODE: &str = "swarm/mode";
pub const INTENT_SSVEP: &str = "intent/ssvep";
pub const INTENT_EMG: &str = "intent/emg";
pub const INTENT_GAZE_SELECTION: &str = "intent/gaze/selection";
pub const INTENT_GAZE_PATH: &str = "intent/gaze/path";
pub const INTENT_GAZE_ERROR: &str = "intent/gaze/error";
pub const LOG_BEHAVIOR: &str = "log/behavior";
pub const LOG_FORMATION: &str = "log/formation";
pub const LOG_REJECTED: &str = "log/rejected";

pub const UI_TOUCH: &str = "ui/touch";
pub const UI_SSVEP_EPOCH: &str = "ui/ssvep/epoch";
pub const UI_EMG_GESTURE: &str = "ui/emg/gesture";
pub const UI_GAZE: &str = "ui/gaze";
pub const UI_GAZE_CAPTURE: &str = "ui/gaze/capture";
pub const UI_TARGET: &str = "ui/target";
pub const UI_MODE: &str = "ui/mode";

pub fn cmd_vel_topic(id: u32) -> String {
    format!("robot/{id}/cmd_vel")
}

pub fn state_topic(id: u32) -> String {
    format!("robot/{id}/state")
}

/// Robot id from `robot/<id>/<leaf>`.
pub fn robot_topic_id(topic: &str, leaf: &str) -> Option<u32> {
    let rest = topic.strip_prefix("robot/")?;
    let (id, tail) = rest.split_once('/')?;
    if tail != leaf {
        return None;
    }
    id.parse().ok()
}

/// Body-frame velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmdVel {
    pub vx: f64,
    pub vy: f64,
    pub w: f64,
}

/// Pose plus world-frame velocity at sim time `t` (seconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotStateMsg {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub vx: f64,
    pub vy: f64,
    pub w: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickMsg {
    pub tick: u64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmModeMsg {
    pub mode: String,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorEventMsg {
    #[serde(flatten)]
    pub event: BehaviorEvent,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationMsg {
    pub t: f64,
    pub progress: f64,
    pub length: f64,
    /// Distance of each robot to its slot, leader first.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsvepIntent {
    pub epoch: u64,
    pub region: usize,
    pub probabilities: Vec<f64>,
    pub correlations: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmgIntent {
    pub gesture: Gesture,
    pub scores: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeSelection {
    pub x: f64,
    pub y: f64,
    pub region: Option<usize>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazePathMsg {
    #[serde(flatten)]
    pub path: FittedPath,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMsg {
    pub error: String,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedMsg {
    pub topic: String,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TouchPhase {
    Down,
    Move,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UiTouch {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub phase: TouchPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UiSsvepEpoch {
    pub region: usize,
    pub snr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UiGesture {
    pub gesture: Gesture,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UiGaze {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    #[serde(default = "yes")]
    pub valid: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaptureAction {
    Start,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UiGazeCapture {
    pub action: CaptureAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UiTarget {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UiModeName {
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UiMode {
    pub mode: UiModeName,
}

/// A validated operator message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UiMessage {
    Touch(UiTouch),
    SsvepEpoch(UiSsvepEpoch),
    Gesture(UiGesture),
    Gaze(UiGaze),
    GazeCapture(UiGazeCapture),
    Target(UiTarget),
    Mode(UiMode),
}

fn finite(name: &str, v: f64) -> Result<(), String> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be finite"))
    }
}

fn parse<T: serde::de::DeserializeOwned>(payload: &[u8]) -> Result<T, String> {
    serde_json::from_slice(payload).map_err(|e| e.to_string())
}

/// Checks a `ui/...` message against its schema. Field coordinates are in
/// meters; they are not checked against a particular field size here.
pub fn validate_ui(topic: &str, payload: &[u8]) -> Result<UiMessage, String> {
    let msg = match topic {
        UI_TOUCH => {
            let m: UiTouch = parse(payload)?;
            finite("x", m.x)?;
            finite("y", m.y)?;
            UiMessage::Touch(m)
        }
        UI_SSVEP_EPOCH => {
            let m: UiSsvepEpoch = parse(payload)?;
            if !(1..=REGION_COUNT).contains(&m.region) {
                return Err(format!("region must be in 1..={REGION_COUNT}, got {}", m.region));
            }
            if !(m.snr.is_finite() && m.snr >= 0.0) {
                return Err(format!("snr must be finite and >= 0, got {}", m.snr));
            }
            UiMessage::SsvepEpoch(m)
        }
        UI_EMG_GESTURE => UiMessage::Gesture(parse(payload)?),
        UI_GAZE => {
            let m: UiGaze = parse(payload)?;
            finite("t", m.t)?;
            finite("x", m.x)?;
            finite("y", m.y)?;
            UiMessage::Gaze(m)
        }
        UI_GAZE_CAPTURE => UiMessage::GazeCapture(parse(payload)?),
        UI_TARGET => {
            let m: UiTarget = parse(payload)?;
            finite("x", m.x)?;
            finite("y", m.y)?;
            UiMessage::Target(m)
        }
        UI_MODE => UiMessage::Mode(parse(payload)?),
        other => return Err(format!("unknown ui topic '{other}'")),
    };
    Ok(msg)
}

impl UiMessage {
    pub fn topic(&self) -> &'static str {
        match self {
            UiMessage::Touch(_) => UI_TOUCH,
            UiMessage::SsvepEpoch(_) => UI_SSVEP_EPOCH,
            UiMessage::Gesture(_) => UI_EMG_GESTURE,
            UiMessage::Gaze(_) => UI_GAZE,
            UiMessage::GazeCapture(_) => UI_GAZE_CAPTURE,
            UiMessage::Target(_) => UI_TARGET,
            UiMessage::Mode(_) => UI_MODE,
        }
    }

    pub fn payload(&self) -> Vec<u8> {
        let v = match self {
            UiMessage::Touch(m) => serde_json::to_vec(m),
            UiMessage::SsvepEpoch(m) => serde_json::to_vec(m),
            UiMessage::Gesture(m) => serde_json::to_vec(m),
            UiMessage::Gaze(m) => serde_json::to_vec(m),
            UiMessage::GazeCapture(m) => serde_json::to_vec(m),
            UiMessage::Target(m) => serde_json::to_vec(m),
            UiMessage::Mode(m) => serde_json::to_vec(m),
        };
        v.expect("ui messages serialize")
    }
}

fn object(props: Value, required: &[&str]) -> Value {
    json!({ "type": "object", "additionalProperties": false, "properties": props, "required": required })
}

/// JSON Schema (draft 2020-12) documents for the inbound UI topics. They say
/// the same thing as [`validate_ui`].
pub fn ui_schemas() -> Value {
    let num = json!({ "type": "number" });
    json!({
        UI_TOUCH: object(json!({
            "id": { "type": "integer", "minimum": 0 },
            "x": num, "y": num,
            "phase": { "enum": ["down", "move", "up"] }
        }), &["id", "x", "y", "phase"]),
        UI_SSVEP_EPOCH: object(json!({
            "region": { "type": "integer", "minimum": 1, "maximum": REGION_COUNT },
            "snr": { "type": "number", "minimum": 0 }
        }), &["region", "snr"]),
        UI_EMG_GESTURE: object(json!({
            "gesture": { "enum": ["stop", "up", "down", "left", "right"] }
        }), &["gesture"]),
        UI_GAZE: object(json!({ "t": num, "x": num, "y": num, "valid": { "type": "boolean" } }), &["t", "x", "y"]),
        UI_GAZE_CAPTURE: object(json!({ "action": { "enum": ["start", "stop"] } }), &["action"]),
        UI_TARGET: object(json!({ "x": num, "y": num }), &["x", "y"]),
        UI_MODE: object(json!({ "mode": { "enum": ["idle"] } }), &["mode"]),
    })
}

/// Topics the console may publish into.
pub const INBOUND_ALLOW: &[&str] = &["ui/#"];
/// Topics relayed out to every console.
pub const OUTBOUND_ALLOW: &[&str] =
    &["robot/+/state", "robot/+/cmd_vel", "tracking/tuio", "intent/#", "swarm/#", "sim/tick", "log/#"];

/// Topics whose payloads are not JSON.
pub fn is_binary_topic(topic: &str) -> bool {
    topic == crate::tuio::TUIO_TOPIC
}
