//! Swarm controllers: leader-first surround, shared-velocity driving and
//! formation following along a fitted path. All outputs are world-frame twists
//! with zero turn rate; heading is left alone.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaze::FittedPath;
use crate::world::{FieldConfig, Point, RobotState, Twist};

/// Follower error at which the formation governor bottoms out.
const GOVERNOR_ERROR_SCALE: f64 = 0.1;
const GOVERNOR_FLOOR: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BehaviorError {
    #[error("behavior needs at least one robot")]
    NoRobots,
    #[error("formation has {shape} slots but {robots} robots")]
    ShapeMismatch { robots: usize, shape: usize },
    #[error("invalid behavior config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorConfig {
    pub kp: f64,
    pub cruise_speed: f64,
    pub surround_radius: f64,
    pub min_separation: f64,
    pub arrival_tolerance: f64,
    /// Speed cap while tracking a moving formation slot. Outer slots on a
    /// curve move faster than the anchor, so this sits above cruise.
    pub max_track_speed: f64,
    /// Offsets in the path frame (x along the tangent, y to its left); the
    /// first entry belongs to the leader.
    pub formation: Vec<Point>,
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        Self {
            kp: 1.5,
            cruise_speed: 0.15,
            surround_radius: 0.18,
            min_separation: 0.066,
            arrival_tolerance: 0.01,
            max_track_speed: 0.3,
            formation: vec![Point::new(0.0, 0.0), Point::new(-0.26, 0.15), Point::new(-0.26, -0.15)],
        }
    }
}

impl BehaviorConfig {
    pub fn validate(&self, robot_radius: f64) -> Result<(), BehaviorError> {
        let positive = [
            ("kp", self.kp),
            ("cruise_speed", self.cruise_speed),
            ("surround_radius", self.surround_radius),
            ("min_separation", self.min_separation),
            ("arrival_tolerance", self.arrival_tolerance),
            ("max_track_speed", self.max_track_speed),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(BehaviorError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.surround_radius <= 2.0 * robot_radius {
            return Err(BehaviorError::Config(format!(
                "surround_radius {} must exceed the robot diameter {}",
                self.surround_radius,
                2.0 * robot_radius
            )));
        }
        if self.formation.is_empty() || self.formation.iter().any(|p| !p.is_finite()) {
            return Err(BehaviorError::Config("formation needs at least one finite offset".into()));
        }
        Ok(())
    }
}

fn clamp_speed(v: Point, max: f64) -> Point {
    let n = v.norm();
    if n > max {
        v * (max / n)
    } else {
        v
    }
}

fn twist_of(v: Point) -> Twist {
    Twist::new(v.x, v.y, 0.0)
}

fn lin(t: &Twist) -> Point {
    Point::new(t.vx, t.vy)
}

/// Proportional point controller, speed capped at cruise.
pub fn goto_controller(pos: Point, goal: Point, cfg: &BehaviorConfig) -> Twist {
    let err = goal - pos;
    if err.norm() <= cfg.arrival_tolerance {
        return Twist::ZERO;
    }
    twist_of(clamp_speed(err * cfg.kp, cfg.cruise_speed))
}

/// Like [`goto_controller`] but adds the goal's own velocity, so a moving goal
/// is tracked without steady-state lag.
pub fn track_controller(pos: Point, goal: Point, goal_velocity: Point, cfg: &BehaviorConfig) -> Twist {
    let err = goal - pos;
    if err.norm() <= cfg.arrival_tolerance && goal_velocity.norm() == 0.0 {
        return Twist::ZERO;
    }
    twist_of(clamp_speed(goal_velocity + err * cfg.kp, cfg.max_track_speed))
}

/// Zeroes any twist component that would carry the robot past the boundary
/// margin within `dt`.
pub fn boundary_filter(pos: Point, t: Twist, field: &FieldConfig, dt: f64) -> Twist {
    let m = field.boundary_margin;
    let mut out = t;
    let nx = pos.x + t.vx * dt;
    if (t.vx > 0.0 && nx > field.width - m) || (t.vx < 0.0 && nx < m) {
        out.vx = 0.0;
    }
    let ny = pos.y + t.vy * dt;
    if (t.vy > 0.0 && ny > field.height - m) || (t.vy < 0.0 && ny < m) {
        out.vy = 0.0;
    }
    out
}

/// Pairwise repulsion inside `2·min_separation`. Each robot of a close pair is
/// pushed away from the other with speed `cruise·(2·d_min/d − 1)` capped at
/// cruise; results are re-clamped to cruise.
pub fn avoid_collisions(twists: &[Twist], states: &[RobotState], cfg: &BehaviorConfig) -> Vec<Twist> {
    let reach = 2.0 * cfg.min_separation;
    let mut push = vec![Point::new(0.0, 0.0); states.len()];
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let delta = states[i].position() - states[j].position();
            let d = delta.norm();
            if d >= reach {
                continue;
            }
            let dir = if d > 1e-12 {
                delta * (1.0 / d)
            } else {
                // coincident: separate along x by id order
                Point::new(if states[i].id < states[j].id { -1.0 } else { 1.0 }, 0.0)
            };
            let mag =
                if d > 1e-12 { (cfg.cruise_speed * (reach / d - 1.0)).min(cfg.cruise_speed) } else { cfg.cruise_speed };
            push[i] = push[i] + dir * mag;
            push[j] = push[j] - dir * mag;
        }
    }
    twists
        .iter()
        .zip(push)
        .map(|(t, p)| {
            if p.x == 0.0 && p.y == 0.0 {
                *t
            } else {
                Twist { omega: t.omega, ..twist_of(clamp_speed(lin(t) + p, cfg.cruise_speed)) }
            }
        })
        .collect()
}

/// Shared velocity for every robot with boundary and collision safety.
pub fn common_velocity(
    cmd: Twist,
    states: &[RobotState],
    field: &FieldConfig,
    cfg: &BehaviorConfig,
    dt: f64,
) -> Vec<Twist> {
    let cmd = Twist { omega: 0.0, ..cmd };
    let mut filtered: Vec<Twist> = states.iter().map(|s| boundary_filter(s.position(), cmd, field, dt)).collect();
    queue_behind_blocked(&mut filtered, states, cmd, cfg);
    safe(&filtered, states, field, cfg, dt)
}

/// A robot stopped by the boundary also stops every robot queued behind it
/// within `2·min_separation`, so a column cannot be pressed into the wall.
fn queue_behind_blocked(twists: &mut [Twist], states: &[RobotState], cmd: Twist, cfg: &BehaviorConfig) {
    let reach = 2.0 * cfg.min_separation;
    for axis in 0..2 {
        let (c, get): (f64, fn(Point) -> f64) = if axis == 0 { (cmd.vx, |p| p.x) } else { (cmd.vy, |p| p.y) };
        if c == 0.0 {
            continue;
        }
        let comp = |t: &Twist| if axis == 0 { t.vx } else { t.vy };
        let mut blocked: Vec<bool> = twists.iter().map(|t| comp(t) == 0.0).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..states.len() {
                if blocked[i] {
                    continue;
                }
                let pi = states[i].position();
                let stop = (0..states.len()).any(|j| {
                    let pj = states[j].position();
                    blocked[j] && (get(pj) - get(pi)) * c.signum() > 0.0 && pi.distance(pj) < reach
                });
                if stop {
                    blocked[i] = true;
                    changed = true;
                }
            }
        }
        for (t, b) in twists.iter_mut().zip(blocked) {
            if b {
                if axis == 0 {
                    t.vx = 0.0;
                } else {
                    t.vy = 0.0;
                }
            }
        }
    }
}

fn safe(twists: &[Twist], states: &[RobotState], field: &FieldConfig, cfg: &BehaviorConfig, dt: f64) -> Vec<Twist> {
    avoid_collisions(twists, states, cfg)
        .into_iter()
        .zip(states)
        .map(|(t, s)| boundary_filter(s.position(), t, field, dt))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurroundPlan {
    pub target: Point,
    pub leader: u32,
    pub radius: f64,
    /// (robot id, goal), leader first, followers in slot order.
    pub goals: Vec<(u32, Point)>,
}

impl SurroundPlan {
    pub fn goal_of(&self, id: u32) -> Option<Point> {
        self.goals.iter().find(|(r, _)| *r == id).map(|(_, g)| *g)
    }
}

/// Slot radius large enough that adjacent slots keep `min_separation`.
pub fn surround_radius(followers: usize, cfg: &BehaviorConfig) -> f64 {
    if followers < 2 {
        return cfg.surround_radius;
    }
    let needed = cfg.min_separation / (2.0 * (PI / followers as f64).sin());
    cfg.surround_radius.max(needed)
}

/// Leader goes to the target; the others take evenly spaced slots on a circle
/// around it, matched to robots by bearing order.
pub fn surround_allocation(
    states: &[RobotState],
    target: Point,
    field: &FieldConfig,
    cfg: &BehaviorConfig,
) -> Result<SurroundPlan, BehaviorError> {
    let mut best: Option<(f64, u32)> = None;
    for s in states {
        let d = s.position().distance(target);
        best = match best {
            Some((bd, bid)) if bd < d || (bd == d && bid < s.id) => Some((bd, bid)),
            _ => Some((d, s.id)),
        };
    }
    let (_, leader) = best.ok_or(BehaviorError::NoRobots)?;
    let bearing = |p: Point| (p.y - target.y).atan2(p.x - target.x).rem_euclid(TAU);
    let mut rest: Vec<(f64, u32)> =
        states.iter().filter(|s| s.id != leader).map(|s| (bearing(s.position()), s.id)).collect();
    rest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let m = rest.len();
    let radius = surround_radius(m, cfg);
    let mut goals = vec![(leader, field.clamp_with_margin(target))];
    for (j, (_, id)) in rest.into_iter().enumerate() {
        let a = TAU * j as f64 / m as f64;
        let slot = target + Point::new(a.cos(), a.sin()) * radius;
        goals.push((id, field.clamp_with_margin(slot)));
    }
    Ok(SurroundPlan { target, leader, radius, goals })
}

/// Result of one formation step.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationStep {
    pub twists: Vec<Twist>,
    pub progress: f64,
    pub goals: Vec<Point>,
    /// Distance of each robot to its slot before this step.
    pub errors: Vec<f64>,
    pub complete: bool,
}

/// Half-width of the chord used for the formation heading. The spline's own
/// tangent carries the knot jitter, magnified by the slot offsets.
const HEADING_HALF_CHORD: f64 = 0.05;

fn formation_heading(path: &FittedPath, s: f64) -> Point {
    let len = path.length();
    let d = path.sample((s + HEADING_HALF_CHORD).min(len)).point - path.sample((s - HEADING_HALF_CHORD).max(0.0)).point;
    if d.norm() > 1e-9 {
        d * (1.0 / d.norm())
    } else {
        path.sample(s).tangent
    }
}

fn formation_goals(path: &FittedPath, s: f64, shape: &[Point], field: &FieldConfig) -> Vec<Point> {
    let at = path.sample(s);
    let t = formation_heading(path, s);
    let n = Point::new(-t.y, t.x);
    shape.iter().map(|o| field.clamp_with_margin(at.point + t * o.x + n * o.y)).collect()
}

/// Moves the formation anchor along `path` and steers each robot (in `states`
/// order, matched to `cfg.formation`) to its slot.
pub fn formation_follow(
    path: &FittedPath,
    states: &[RobotState],
    progress: f64,
    dt: f64,
    field: &FieldConfig,
    cfg: &BehaviorConfig,
) -> Result<FormationStep, BehaviorError> {
    if states.is_empty() {
        return Err(BehaviorError::NoRobots);
    }
    if states.len() != cfg.formation.len() {
        return Err(BehaviorError::ShapeMismatch { robots: states.len(), shape: cfg.formation.len() });
    }
    let len = path.length();
    let s = progress.clamp(0.0, len);
    let current = formation_goals(path, s, &cfg.formation, field);
    let errors: Vec<f64> = states.iter().zip(&current).map(|(r, g)| r.position().distance(*g)).collect();
    if s >= len && errors.iter().all(|e| *e <= cfg.arrival_tolerance) {
        return Ok(FormationStep {
            twists: vec![Twist::ZERO; states.len()],
            progress: len,
            goals: current,
            errors,
            complete: true,
        });
    }
    let follower_err = errors.iter().skip(1).copied().fold(0.0, f64::max);
    let governor = (1.0 - follower_err / GOVERNOR_ERROR_SCALE).max(GOVERNOR_FLOOR);
    let next = (s + governor * cfg.cruise_speed * dt).min(len);
    let goals = formation_goals(path, next, &cfg.formation, field);
    let raw: Vec<Twist> = states
        .iter()
        .zip(goals.iter().zip(&current))
        .map(|(r, (g, g0))| track_controller(r.position(), *g, (*g - *g0) * (1.0 / dt), cfg))
        .collect();
    Ok(FormationStep { twists: safe(&raw, states, field, cfg, dt), progress: next, goals, errors, complete: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SwarmCommand {
    Idle,
    GotoSurround { target: Point },
    CommonVelocity { twist: Twist },
    FormationFollow { path: FittedPath },
}

impl SwarmCommand {
    pub fn mode_name(&self) -> &'static str {
        match self {
            SwarmCommand::Idle => "idle",
            SwarmCommand::GotoSurround { .. } => "goto-surround",
            SwarmCommand::CommonVelocity { .. } => "common-velocity",
            SwarmCommand::FormationFollow { .. } => "formation-follow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum BehaviorEvent {
    LeaderDispatched { leader: u32 },
    FollowersDispatched { followers: Vec<u32> },
    SurroundComplete,
    FormationComplete,
}

#[derive(Debug, Clone)]
enum Active {
    Idle,
    Surround { plan: SurroundPlan, followers_dispatched: bool, complete: bool },
    Common(Twist),
    Formation { path: FittedPath, progress: f64, complete: bool },
}

/// Owns the active mode and turns a state snapshot into per-robot commands.
#[derive(Debug, Clone)]
pub struct SwarmController {
    cfg: BehaviorConfig,
    field: FieldConfig,
    active: Active,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlOutput {
    /// World-frame twist per robot, in snapshot order.
    pub twists: Vec<(u32, Twist)>,
    pub events: Vec<BehaviorEvent>,
    pub formation: Option<FormationStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormationStatus {
    pub progress: f64,
    pub length: f64,
    pub errors: Vec<f64>,
}

impl SwarmController {
    pub fn new(cfg: BehaviorConfig, field: FieldConfig) -> Self {
        Self { cfg, field, active: Active::Idle }
    }

    pub fn config(&self) -> &BehaviorConfig {
        &self.cfg
    }

    pub fn mode_name(&self) -> &'static str {
        match self.active {
            Active::Idle => "idle",
            Active::Surround { .. } => "goto-surround",
            Active::Common(_) => "common-velocity",
            Active::Formation { .. } => "formation-follow",
        }
    }

    pub fn surround_plan(&self) -> Option<&SurroundPlan> {
        match &self.active {
            Active::Surround { plan, .. } => Some(plan),
            _ => None,
        }
    }

    pub fn formation_progress(&self) -> Option<f64> {
        match &self.active {
            Active::Formation { progress, .. } => Some(*progress),
            _ => None,
        }
    }

    /// Switches mode. Surround goals are allocated from `states` right away.
    pub fn command(&mut self, cmd: SwarmCommand, states: &[RobotState]) -> Result<Vec<BehaviorEvent>, BehaviorError> {
        let mut events = Vec::new();
        self.active = match cmd {
            SwarmCommand::Idle => Active::Idle,
            SwarmCommand::CommonVelocity { twist } => Active::Common(twist),
            SwarmCommand::GotoSurround { target } => {
                let plan = surround_allocation(states, target, &self.field, &self.cfg)?;
                events.push(BehaviorEvent::LeaderDispatched { leader: plan.leader });
                Active::Surround { plan, followers_dispatched: false, complete: false }
            }
            SwarmCommand::FormationFollow { path } => {
                if states.len() != self.cfg.formation.len() {
                    return Err(BehaviorError::ShapeMismatch { robots: states.len(), shape: self.cfg.formation.len() });
                }
                Active::Formation { path, progress: 0.0, complete: false }
            }
        };
        Ok(events)
    }

    pub fn step(&mut self, states: &[RobotState], dt: f64) -> ControlOutput {
        let mut events = Vec::new();
        let mut formation = None;
        let cfg = &self.cfg;
        let field = &self.field;
        let twists: Vec<Twist> = match &mut self.active {
            Active::Idle => vec![Twist::ZERO; states.len()],
            Active::Common(t) => common_velocity(*t, states, field, cfg, dt),
            Active::Surround { plan, followers_dispatched, complete } => {
                let leader_pos = states.iter().find(|s| s.id == plan.leader).map(|s| s.position());
                let leader_goal = plan.goals[0].1;
                if !*followers_dispatched && leader_pos.is_none_or(|p| p.distance(leader_goal) <= cfg.arrival_tolerance)
                {
                    *followers_dispatched = true;
                    events.push(BehaviorEvent::FollowersDispatched {
                        followers: plan.goals[1..].iter().map(|(id, _)| *id).collect(),
                    });
                }
                let raw: Vec<Twist> = states
                    .iter()
                    .map(|s| match plan.goal_of(s.id) {
                        Some(g) if s.id == plan.leader || *followers_dispatched => {
                            goto_controller(s.position(), g, cfg)
                        }
                        _ => Twist::ZERO,
                    })
                    .collect();
                let arrived = *followers_dispatched
                    && states
                        .iter()
                        .all(|s| plan.goal_of(s.id).is_none_or(|g| s.position().distance(g) <= cfg.arrival_tolerance));
                if arrived && !*complete {
                    *complete = true;
                    events.push(BehaviorEvent::SurroundComplete);
                }
                safe(&raw, states, field, cfg, dt)
            }
            Active::Formation { path, progress, complete } => {
                if *complete {
                    vec![Twist::ZERO; states.len()]
                } else {
                    match formation_follow(path, states, *progress, dt, field, cfg) {
                        Ok(step) => {
                            formation = Some(FormationStatus {
                                progress: *progress,
                                length: path.length(),
                                errors: step.errors.clone(),
                            });
                            *progress = step.progress;
                            if step.complete {
                                *complete = true;
                                events.push(BehaviorEvent::FormationComplete);
                            }
                            step.twists
                        }
                        // robot set changed underneath the formation: hold still
                        Err(_) => vec![Twist::ZERO; states.len()],
                    }
                }
            }
        };
        ControlOutput { twists: states.iter().map(|s| s.id).zip(twists).collect(), events, formation }
    }
}
