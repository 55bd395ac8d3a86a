//! Scenario scripts: timed operator actions expanded into the UI messages a
//! console would have sent.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::GazeBlock;
use super::schema::{
    CaptureAction, TouchPhase, UiGaze, UiGazeCapture, UiGesture, UiMessage, UiMode, UiModeName, UiSsvepEpoch, UiTarget,
    UiTouch,
};
use crate::emg::Gesture;
use crate::gaze::GazeSynth;
use crate::world::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvent {
    /// Seconds of simulated time.
    pub t: f64,
    #[serde(flatten)]
    pub action: Action,
}

impl ScriptEvent {
    pub fn new(t: f64, action: Action) -> Self {
        Self { t, action }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Action {
    SsvepEpoch {
        region: usize,
        snr: f64,
    },
    Gesture {
        gesture: Gesture,
    },
    Target {
        x: f64,
        y: f64,
    },
    Idle,
    Touch {
        id: u32,
        x: f64,
        y: f64,
        duration: f64,
    },
    GazeFixate {
        x: f64,
        y: f64,
        duration: f64,
    },
    GazeTrace {
        shape: Shape,
        duration: f64,
        /// Wrap the trace in capture start/stop markers.
        #[serde(default = "yes")]
        capture: bool,
    },
    /// Raw message straight onto the broker.
    Publish {
        topic: String,
        payload: Value,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    /// Half circle from `start_angle` through `start_angle + π`.
    Semicircle {
        center: Point,
        radius: f64,
        #[serde(default)]
        start_angle: f64,
    },
    Line {
        from: Point,
        to: Point,
    },
    Polyline {
        points: Vec<Point>,
    },
}

impl Shape {
    /// Position at `u` in `[0, 1]`.
    pub fn at(&self, u: f64) -> Point {
        match self {
            Shape::Semicircle { center, radius, start_angle } => {
                let a = start_angle + PI * u;
                *center + Point::new(a.cos(), a.sin()) * *radius
            }
            Shape::Line { from, to } => *from + (*to - *from) * u,
            Shape::Polyline { points } => match points.len() {
                0 => Point::new(f64::NAN, f64::NAN),
                1 => points[0],
                n => {
                    let x = u.clamp(0.0, 1.0) * (n - 1) as f64;
                    let i = (x.floor() as usize).min(n - 2);
                    points[i] + (points[i + 1] - points[i]) * (x - i as f64)
                }
            },
        }
    }

    pub fn probe_points(&self) -> Vec<Point> {
        match self {
            Shape::Polyline { points } if points.len() < 2 => vec![Point::new(f64::NAN, f64::NAN)],
            Shape::Polyline { points } => points.clone(),
            _ => (0..=32).map(|k| self.at(k as f64 / 32.0)).collect(),
        }
    }
}

/// A message due at sim time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheduled {
    pub t: f64,
    pub topic: String,
    pub payload: Vec<u8>,
}

impl Scheduled {
    fn ui(t: f64, m: UiMessage) -> Self {
        Self { t, topic: m.topic().to_string(), payload: m.payload() }
    }
}

fn gaze_samples<R: Rng + ?Sized>(
    start: f64,
    f: impl Fn(f64) -> Point,
    duration: f64,
    gaze: &GazeBlock,
    rng: &mut R,
    out: &mut Vec<Scheduled>,
) {
    let mut synth = GazeSynth::new(gaze.rate, gaze.tremor_sigma);
    for s in synth.trace(f, duration, rng) {
        let t = start + s.t;
        out.push(Scheduled::ui(t, UiMessage::Gaze(UiGaze { t, x: s.point.x, y: s.point.y, valid: true })));
    }
}

/// Expands a script into time-ordered messages; ties keep script order.
pub fn expand_script<R: Rng + ?Sized>(events: &[ScriptEvent], gaze: &GazeBlock, rng: &mut R) -> Vec<Scheduled> {
    let mut out = Vec::new();
    for e in events {
        let t = e.t;
        match &e.action {
            Action::SsvepEpoch { region, snr } => {
                out.push(Scheduled::ui(t, UiMessage::SsvepEpoch(UiSsvepEpoch { region: *region, snr: *snr })))
            }
            Action::Gesture { gesture } => {
                out.push(Scheduled::ui(t, UiMessage::Gesture(UiGesture { gesture: *gesture })))
            }
            Action::Target { x, y } => out.push(Scheduled::ui(t, UiMessage::Target(UiTarget { x: *x, y: *y }))),
            Action::Idle => out.push(Scheduled::ui(t, UiMessage::Mode(UiMode { mode: UiModeName::Idle }))),
            Action::Touch { id, x, y, duration } => {
                let touch = |phase| UiMessage::Touch(UiTouch { id: *id, x: *x, y: *y, phase });
                out.push(Scheduled::ui(t, touch(TouchPhase::Down)));
                out.push(Scheduled::ui(t + duration, touch(TouchPhase::Up)));
            }
            Action::GazeFixate { x, y, duration } => {
                let p = Point::new(*x, *y);
                gaze_samples(t, |_| p, *duration, gaze, rng, &mut out);
            }
            Action::GazeTrace { shape, duration, capture } => {
                if *capture {
                    out.push(Scheduled::ui(t, UiMessage::GazeCapture(UiGazeCapture { action: CaptureAction::Start })));
                }
                gaze_samples(t, |u| shape.at(u), *duration, gaze, rng, &mut out);
                if *capture {
                    out.push(Scheduled::ui(
                        t + duration,
                        UiMessage::GazeCapture(UiGazeCapture { action: CaptureAction::Stop }),
                    ));
                }
            }
            Action::Publish { topic, payload } => out.push(Scheduled {
                t,
                topic: topic.clone(),
                payload: serde_json::to_vec(payload).expect("json value serializes"),
            }),
        }
    }
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    out
}
