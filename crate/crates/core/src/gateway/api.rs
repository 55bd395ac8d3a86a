//! Request and response bodies of the HTTP/JSON service under `/v1`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::sim::ExitReport;
use crate::emg::{TrainConfig, TrainingReport};
use crate::robot::KinematicParams;
use crate::ssvep::EegParams;
use crate::world::{Point, Twist};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub broker_addr: String,
    pub connections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub valid: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    /// A scenario document; validated server-side so every violation is reported.
    pub config: Value,
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(default)]
    pub include_log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResponse {
    pub report: ExitReport,
    /// The newline-delimited log, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishRequest {
    pub topic: String,
    pub payload: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishResponse {
    pub delivered: usize,
}

/// Either a recorded window (`samples`, channels × time, with `fs`) or a
/// synthetic one (`region`, `snr`, `seed`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsvepRequest {
    pub samples: Option<Vec<Vec<f64>>>,
    pub fs: Option<f64>,
    pub region: Option<usize>,
    pub snr: Option<f64>,
    pub seed: u64,
    pub eeg: EegParams,
    pub softmax_beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmgTrainRequest {
    pub per_class: usize,
    pub held_out_per_class: usize,
    pub seed: u64,
    pub train: TrainConfig,
}

impl Default for EmgTrainRequest {
    fn default() -> Self {
        Self { per_class: 100, held_out_per_class: 50, seed: 0, train: TrainConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmgTrainResponse {
    pub report: TrainingReport,
    /// The model in the on-disk `.emg` format, base64.
    pub model_file_b64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazeFitRequest {
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicsRequest {
    pub params: KinematicParams,
    /// Body twist to map to wheel speeds.
    pub twist: Option<Twist>,
    /// Wheel speeds (rad/s) to map to a body twist.
    pub wheels: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicsResponse {
    pub wheels: Option<[f64; 3]>,
    pub twist: Option<Twist>,
    /// `twist` after the saturation limits, when a twist was given.
    pub clamped: Option<Twist>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuioBytes {
    pub bytes_b64: String,
}
