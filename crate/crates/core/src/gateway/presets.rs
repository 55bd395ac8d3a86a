//! The three demonstration scenarios at desk scale.

use std::f64::consts::PI;

use super::config::{RobotSpec, ScenarioConfig};
use super::script::{Action, ScriptEvent, Shape};
use crate::emg::Gesture;
use crate::world::Point;

pub const SURROUND_REGION: usize = 26;

/// Five robots; an SSVEP epoch picks region 26 and the swarm surrounds it.
pub fn surround() -> ScenarioConfig {
    ScenarioConfig {
        name: "surround".into(),
        robots: vec![
            RobotSpec::new(1, 1.7, 0.4),
            RobotSpec::new(2, 1.9, 0.4),
            RobotSpec::new(3, 2.1, 0.4),
            RobotSpec::new(4, 1.8, 0.6),
            RobotSpec::new(5, 2.0, 0.6),
        ],
        seed: 1,
        duration: 35.0,
        script: vec![ScriptEvent::new(1.0, Action::SsvepEpoch { region: SURROUND_REGION, snr: 10.0 })],
        ..Default::default()
    }
}

/// Ten robots driven together through the five gestures.
pub fn common_velocity() -> ScenarioConfig {
    let robots =
        (0..10).map(|i| RobotSpec::new(i + 1, 0.71 + 0.25 * (i % 5) as f64, 0.55 + 0.25 * (i / 5) as f64)).collect();
    let gesture = |t, gesture| ScriptEvent::new(t, Action::Gesture { gesture });
    ScenarioConfig {
        name: "common-velocity".into(),
        robots,
        seed: 2,
        duration: 30.0,
        script: vec![
            gesture(0.5, Gesture::Up),
            gesture(6.5, Gesture::Down),
            gesture(12.5, Gesture::Stop),
            gesture(15.5, Gesture::Left),
            gesture(22.5, Gesture::Right),
        ],
        ..Default::default()
    }
}

pub const FORMATION_CENTER: Point = Point::new(1.21, 0.75);
pub const FORMATION_RADIUS: f64 = 0.3;

/// Three robots follow a semicircle drawn with the gaze.
pub fn formation() -> ScenarioConfig {
    ScenarioConfig {
        name: "formation".into(),
        robots: vec![RobotSpec::new(1, 0.91, 0.75), RobotSpec::new(2, 1.06, 1.01), RobotSpec::new(3, 0.76, 1.01)],
        seed: 3,
        duration: 25.0,
        script: vec![ScriptEvent::new(
            0.5,
            Action::GazeTrace {
                shape: Shape::Semicircle { center: FORMATION_CENTER, radius: FORMATION_RADIUS, start_angle: PI },
                duration: 3.0,
                capture: true,
            },
        )],
        ..Default::default()
    }
}

pub fn by_name(name: &str) -> Option<ScenarioConfig> {
    match name {
        "surround" => Some(surround()),
        "common-velocity" => Some(common_velocity()),
        "formation" => Some(formation()),
        _ => None,
    }
}

pub const NAMES: [&str; 3] = ["surround", "common-velocity", "formation"];
