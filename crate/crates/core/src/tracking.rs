//! Virtual multitouch surface.
//!
//! Looks at simulated ground truth once per tracker frame, perturbs positions
//! with Gaussian noise, estimates motion from a short window of its own noisy
//! observations and emits a TUIO frame. Robots appear as objects whose class id
//! is the robot id, obstacles as blobs, operator touches as cursors.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::tuio::{TuioBlob, TuioCursor, TuioFrame, TuioObject};
use crate::world::{normalize_angle, FieldConfig, Point, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub rate: f64,
    pub pos_noise_sigma: f64,
    pub angle_noise_sigma: f64,
    pub velocity_window: usize,
    pub seed: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { rate: 30.0, pos_noise_sigma: 0.0015, angle_noise_sigma: 0.01, velocity_window: 5, seed: 0 }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(format!("tracker rate must be > 0, got {}", self.rate));
        }
        if !(self.pos_noise_sigma >= 0.0 && self.angle_noise_sigma >= 0.0) {
            return Err("tracker noise sigmas must be >= 0".into());
        }
        if self.velocity_window < 2 {
            return Err("velocity window needs at least 2 frames".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub angle: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Touch {
    pub id: u32,
    pub point: Point,
}

/// Ground truth the tracker observes in one frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorldSnapshot {
    pub robots: Vec<(u32, Pose)>,
    pub obstacles: Vec<Obstacle>,
    pub touches: Vec<Touch>,
}

/// Least-squares velocity and acceleration from uniformly spaced samples.
///
/// Velocity is the slope of a linear fit over the whole window, acceleration
/// twice the leading coefficient of a quadratic fit. Missing history yields
/// zeros (one sample: both zero; two samples: no acceleration).
pub fn estimate_velocity(history: &[f64], rate: f64) -> (f64, f64) {
    let n = history.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let dt = 1.0 / rate;
    let t_mean = (n - 1) as f64 * dt / 2.0;
    let x_mean = history.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, x) in history.iter().enumerate() {
        let t = i as f64 * dt - t_mean;
        sxy += t * (x - x_mean);
        sxx += t * t;
    }
    let velocity = sxy / sxx;
    if n < 3 {
        return (velocity, 0.0);
    }
    // quadratic fit in centred time for conditioning
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for (i, x) in history.iter().enumerate() {
        let t = i as f64 * dt - t_mean;
        let row = Vector3::new(1.0, t, t * t);
        ata += row * row.transpose();
        atb += row * (x - x_mean);
    }
    let accel = ata.lu().solve(&atb).map(|c| 2.0 * c[2]).unwrap_or(0.0);
    (velocity, accel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EntityKey {
    Robot(u32),
    Obstacle(u32),
    Touch(u32),
}

#[derive(Debug, Clone)]
struct Track {
    session_id: i32,
    xs: VecDeque<f64>,
    ys: VecDeque<f64>,
    /// unwrapped heading samples
    angles: VecDeque<f64>,
}

impl Track {
    fn new(session_id: i32) -> Self {
        Self { session_id, xs: VecDeque::new(), ys: VecDeque::new(), angles: VecDeque::new() }
    }

    fn push(&mut self, window: usize, x: f64, y: f64, angle: f64) {
        let unwrapped = match self.angles.back() {
            Some(prev) => prev + normalize_angle(angle - prev).unwrap_or(0.0),
            None => angle,
        };
        for (q, v) in [(&mut self.xs, x), (&mut self.ys, y), (&mut self.angles, unwrapped)] {
            q.push_back(v);
            while q.len() > window {
                q.pop_front();
            }
        }
    }
}

/// Motion estimates for one tracked entity, in field units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Motion {
    vx: f64,
    vy: f64,
    ax: f64,
    ay: f64,
    vang: f64,
    aang: f64,
}

pub struct Tracker {
    config: TrackerConfig,
    field: FieldConfig,
    fseq: i32,
    next_session: i32,
    tracks: BTreeMap<EntityKey, Track>,
}

fn wrap_2pi(theta: f64) -> f64 {
    let a = theta.rem_euclid(2.0 * PI);
    if a >= 2.0 * PI {
        0.0
    } else {
        a
    }
}

impl Tracker {
    pub fn new(config: TrackerConfig, field: FieldConfig) -> Self {
        Self { config, field, fseq: 0, next_session: 1, tracks: BTreeMap::new() }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn fseq(&self) -> i32 {
        self.fseq
    }

    fn noise<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
        if sigma > 0.0 {
            Normal::new(0.0, sigma).map(|n| n.sample(rng)).unwrap_or(0.0)
        } else {
            0.0
        }
    }

    fn track(&mut self, key: EntityKey, x: f64, y: f64, angle: f64) -> (i32, Motion) {
        let window = self.config.velocity_window;
        let next = &mut self.next_session;
        let track = self.tracks.entry(key).or_insert_with(|| {
            let t = Track::new(*next);
            *next += 1;
            t
        });
        track.push(window, x, y, angle);
        let rate = self.config.rate;
        let xs: Vec<f64> = track.xs.iter().copied().collect();
        let ys: Vec<f64> = track.ys.iter().copied().collect();
        let angs: Vec<f64> = track.angles.iter().copied().collect();
        let (vx, ax) = estimate_velocity(&xs, rate);
        let (vy, ay) = estimate_velocity(&ys, rate);
        let (vang, aang) = estimate_velocity(&angs, rate);
        (track.session_id, Motion { vx, vy, ax, ay, vang, aang })
    }

    fn normalized(&self, x: f64, y: f64) -> (f64, f64) {
        ((x / self.field.width).clamp(0.0, 1.0), (y / self.field.height).clamp(0.0, 1.0))
    }

    /// Produces the next frame; fseq increases by one per call.
    pub fn observe<R: Rng + ?Sized>(&mut self, snapshot: &WorldSnapshot, rng: &mut R) -> TuioFrame {
        self.fseq += 1;
        let (w, h) = (self.field.width, self.field.height);
        let sp = self.config.pos_noise_sigma;
        let sa = self.config.angle_noise_sigma;
        let mut frame = TuioFrame::new(self.fseq);
        let mut seen = Vec::new();

        let mut robots = snapshot.robots.clone();
        robots.sort_by_key(|(id, _)| *id);
        for (id, pose) in robots {
            let x = pose.x + Self::noise(sp, rng);
            let y = pose.y + Self::noise(sp, rng);
            let a = pose.theta + Self::noise(sa, rng);
            let key = EntityKey::Robot(id);
            seen.push(key);
            let (sid, m) = self.track(key, x, y, a);
            let (u, v) = self.normalized(x, y);
            frame.objects.push(TuioObject {
                session_id: sid,
                class_id: id as i32,
                x: u,
                y: v,
                angle: wrap_2pi(a),
                vx: m.vx / w,
                vy: m.vy / h,
                vang: m.vang,
                motion_accel: (m.ax / w).hypot(m.ay / h),
                rotation_accel: m.aang,
            });
        }

        let mut obstacles = snapshot.obstacles.clone();
        obstacles.sort_by_key(|o| o.id);
        for o in obstacles {
            let x = o.x + Self::noise(sp, rng);
            let y = o.y + Self::noise(sp, rng);
            let a = o.angle + Self::noise(sa, rng);
            let key = EntityKey::Obstacle(o.id);
            seen.push(key);
            let (sid, m) = self.track(key, x, y, a);
            let (u, v) = self.normalized(x, y);
            let bw = (o.width / w).clamp(f64::MIN_POSITIVE, 1.0);
            let bh = (o.height / h).clamp(f64::MIN_POSITIVE, 1.0);
            frame.blobs.push(TuioBlob {
                session_id: sid,
                x: u,
                y: v,
                angle: wrap_2pi(a),
                width: bw,
                height: bh,
                area: (bw * bh).clamp(f64::MIN_POSITIVE, 1.0),
                vx: m.vx / w,
                vy: m.vy / h,
                vang: m.vang,
                motion_accel: (m.ax / w).hypot(m.ay / h),
                rotation_accel: m.aang,
            });
        }

        let mut touches = snapshot.touches.clone();
        touches.sort_by_key(|t| t.id);
        for t in touches {
            // touches are operator input, reported as given
            let key = EntityKey::Touch(t.id);
            seen.push(key);
            let (sid, m) = self.track(key, t.point.x, t.point.y, 0.0);
            let (u, v) = self.normalized(t.point.x, t.point.y);
            frame.cursors.push(TuioCursor {
                session_id: sid,
                x: u,
                y: v,
                vx: m.vx / w,
                vy: m.vy / h,
                motion_accel: (m.ax / w).hypot(m.ay / h),
            });
        }

        self.tracks.retain(|k, _| seen.contains(k));
        frame
    }
}
