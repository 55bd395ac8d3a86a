//! Surface-EMG gesture pipeline: synthetic 8-channel signals, RMS features, a
//! small MLP classifier and a stability debounce.

mod debounce;
mod mlp;
pub mod model_file;
mod synth;

pub(crate) use synth::synthesize_chunk;

pub use debounce::Debouncer;
pub use mlp::{
    classify_window, gradient_check, train_and_evaluate, train_classifier, Dataset, GradientReport, MlpModel,
    TrainConfig, TrainingReport,
};
pub use synth::{generate_dataset, synthesize_emg, EmgSignal, ACTIVATION_TEMPLATE, COMMON_MODE_SIGMA};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::Twist;

pub const CHANNELS: usize = 8;
pub const SAMPLE_RATE: f64 = 1000.0;
/// 200 ms analysis window.
pub const WINDOW_SAMPLES: usize = 200;
/// 100 ms hop between successive windows.
pub const HOP_SAMPLES: usize = 100;
pub const HOP_SECONDS: f64 = HOP_SAMPLES as f64 / SAMPLE_RATE;
pub const DEFAULT_COMMAND_SPEED: f64 = 0.15;

pub type Features = [f64; CHANNELS];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmgError {
    #[error("unknown gesture '{0}'")]
    UnknownGesture(String),
    #[error("signal shorter than one {WINDOW_SAMPLES}-sample window")]
    TooShort,
    #[error("window must have {CHANNELS} channels of {WINDOW_SAMPLES} finite samples")]
    BadWindow,
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("backprop gradient disagrees with finite differences (max relative error {0:.3e})")]
    GradientCheck(f64),
    #[error("model file: {0}")]
    ModelFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gesture {
    Stop,
    Up,
    Down,
    Left,
    Right,
}

impl Gesture {
    pub const ALL: [Gesture; 5] = [Gesture::Stop, Gesture::Up, Gesture::Down, Gesture::Left, Gesture::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Gesture::Stop => "stop",
            Gesture::Up => "up",
            Gesture::Down => "down",
            Gesture::Left => "left",
            Gesture::Right => "right",
        }
    }

    /// Field-frame velocity command (y grows downward, so "up" is -y).
    pub fn twist(self, speed: f64) -> Twist {
        match self {
            Gesture::Stop => Twist::ZERO,
            Gesture::Up => Twist::new(0.0, -speed, 0.0),
            Gesture::Down => Twist::new(0.0, speed, 0.0),
            Gesture::Left => Twist::new(-speed, 0.0, 0.0),
            Gesture::Right => Twist::new(speed, 0.0, 0.0),
        }
    }
}

impl std::str::FromStr for Gesture {
    type Err = EmgError;
    fn from_str(s: &str) -> Result<Self, EmgError> {
        Gesture::ALL.into_iter().find(|g| g.name() == s).ok_or_else(|| EmgError::UnknownGesture(s.to_string()))
    }
}

impl std::fmt::Display for Gesture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One analysis window, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmgWindow {
    channels: Vec<Vec<f64>>,
}

impl EmgWindow {
    pub fn new(channels: Vec<Vec<f64>>) -> Result<Self, EmgError> {
        if channels.len() != CHANNELS
            || channels.iter().any(|c| c.len() != WINDOW_SAMPLES || c.iter().any(|v| !v.is_finite()))
        {
            return Err(EmgError::BadWindow);
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }
}

/// Per-channel root mean square.
pub fn extract_features(window: &EmgWindow) -> Features {
    let mut f = [0.0; CHANNELS];
    for (out, ch) in f.iter_mut().zip(window.channels()) {
        *out = (ch.iter().map(|v| v * v).sum::<f64>() / ch.len() as f64).sqrt();
    }
    f
}
