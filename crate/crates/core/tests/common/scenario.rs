//! Log-level checks for the three demonstration scenarios. Each returns a
//! one-line summary on success.

use serde_json::Value;
use swarmdeck_core::behaviors::surround_radius;
use swarmdeck_core::gateway::presets::{FORMATION_RADIUS, SURROUND_REGION};
use swarmdeck_core::gateway::schema::*;
use swarmdeck_core::gateway::{RunOutput, ScenarioConfig};
use swarmdeck_core::world::{Point, RegionGrid};

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn on<'a>(out: &'a RunOutput, topic: &'a str) -> impl Iterator<Item = Value> + 'a {
    out.records.iter().filter(move |r| r.topic == topic).map(|r| serde_json::from_slice(&r.payload).unwrap())
}

pub fn positions_at(out: &RunOutput, t: f64) -> Vec<(u32, Point)> {
    out.records
        .iter()
        .filter_map(|r| {
            let id = robot_topic_id(&r.topic, "state")?;
            let m: RobotStateMsg = serde_json::from_slice(&r.payload).unwrap();
            ((m.t - t).abs() < 1e-9).then(|| (id, Point::new(m.x, m.y)))
        })
        .collect()
}

fn safe(out: &RunOutput) -> Result<(), String> {
    let s = &out.report.safety;
    ensure!(
        s.collision_violations == 0 && s.containment_violations == 0,
        "{} collision / {} containment violations, first: {:?}",
        s.collision_violations,
        s.containment_violations,
        s.first_violation
    );
    Ok(())
}

/// Leader reaches the selected region before followers move; followers end on
/// the surround circle.
pub fn check_surround(cfg: &ScenarioConfig, out: &RunOutput) -> Result<String, String> {
    safe(out)?;
    let intents: Vec<Value> = on(out, INTENT_SSVEP).collect();
    ensure!(intents.len() == 1, "{} ssvep intents", intents.len());
    ensure!(intents[0]["region"] == SURROUND_REGION, "decoded region {}", intents[0]["region"]);

    let events: Vec<Value> = on(out, LOG_BEHAVIOR).collect();
    let kinds: Vec<&str> = events.iter().filter_map(|v| v["event"].as_str()).collect();
    ensure!(kinds == ["leader-dispatched", "followers-dispatched", "surround-complete"], "behavior events {kinds:?}");
    let leader = events[0]["leader"].as_u64().unwrap() as u32;
    let dispatched_at = events[1]["t"].as_f64().unwrap();

    let tol = cfg.behavior.arrival_tolerance;
    let center = RegionGrid::ssvep(&cfg.field).region_center(SURROUND_REGION).unwrap();
    let snapshot = positions_at(out, dispatched_at);
    let lead = snapshot.iter().find(|(id, _)| *id == leader).ok_or("leader missing at dispatch")?.1;
    let lead_err = lead.distance(center);
    ensure!(lead_err <= tol, "leader {lead_err:.4} m from center when followers left");

    let radius = surround_radius(cfg.robots.len() - 1, &cfg.behavior);
    let mut worst = 0.0f64;
    for r in &out.report.robots {
        let d = Point::new(r.x, r.y).distance(center);
        if r.id == leader {
            ensure!(d <= tol, "leader ends {d:.4} m from center");
        } else {
            worst = worst.max((d - radius).abs());
        }
    }
    ensure!(worst <= 2.0 * tol, "follower off the surround circle by {worst:.4} m");
    Ok(format!(
        "region {SURROUND_REGION}, leader {lead_err:.4} m from center at t={dispatched_at:.2}, followers within {worst:.4} m of r={radius:.3}"
    ))
}

/// Ten robots, five gestures, no safety violations.
pub fn check_common_velocity(cfg: &ScenarioConfig, out: &RunOutput) -> Result<String, String> {
    safe(out)?;
    ensure!(cfg.robots.len() == 10, "{} robots", cfg.robots.len());
    let gestures: Vec<String> = on(out, INTENT_EMG).filter_map(|v| v["gesture"].as_str().map(str::to_string)).collect();
    ensure!(gestures == ["up", "down", "stop", "left", "right"], "gestures {gestures:?}");
    Ok(format!(
        "{} robots, {:.0} s, gestures {gestures:?}, min pair distance {:.3} m",
        cfg.robots.len(),
        out.report.sim_time,
        out.report.safety.min_pair_distance.unwrap_or(f64::NAN)
    ))
}

/// Gaze semicircle fitted to the right length; followers hold their slots.
pub fn check_formation(out: &RunOutput) -> Result<String, String> {
    safe(out)?;
    let paths: Vec<Value> = on(out, INTENT_GAZE_PATH).collect();
    ensure!(paths.len() == 1, "{} gaze paths", paths.len());
    let analytic = std::f64::consts::PI * FORMATION_RADIUS;
    let length = paths[0]["length"].as_f64().unwrap();
    let rel = (length - analytic).abs() / analytic;
    ensure!(rel <= 0.03, "path length {length:.4} vs {analytic:.4}");

    let log: Vec<Value> = on(out, LOG_FORMATION).collect();
    let last = log.last().ok_or("no formation log")?;
    let progress = last["progress"].as_f64().unwrap();
    ensure!((progress - length).abs() < 1e-9, "stopped at {progress:.4} of {length:.4}");
    let started = log[0]["t"].as_f64().unwrap();
    let worst = log
        .iter()
        .filter(|m| m["t"].as_f64().unwrap() >= started + 2.0)
        .flat_map(|m| m["errors"].as_array().unwrap()[1..].iter().map(|e| e.as_f64().unwrap()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    ensure!(worst <= 0.01, "steady-state follower error {worst:.4} m");
    let events: Vec<String> = on(out, LOG_BEHAVIOR).filter_map(|v| v["event"].as_str().map(str::to_string)).collect();
    ensure!(events == ["formation-complete"], "behavior events {events:?}");
    Ok(format!(
        "length {length:.4} vs {analytic:.4} ({:.2}%), steady follower error {:.2} mm",
        rel * 100.0,
        worst * 1000.0
    ))
}
