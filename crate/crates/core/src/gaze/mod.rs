//! Gaze pipeline: dwell selection, trajectory capture and smooth path fitting
//! over a 120 Hz stream of field-coordinate samples.

mod path;

pub use path::{
    fit_trajectory, resample_uniform, sample_path, smooth_points, FittedPath, PathSample, TABLE_RESOLUTION,
};

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{Point, RegionGrid};

pub const DEFAULT_RATE: f64 = 120.0;
/// Minimum spacing kept between consecutive captured points.
pub const DEDUP_DISTANCE: f64 = 0.001;
pub const MIN_PATH_POINTS: usize = 4;
pub const DEFAULT_TREMOR_SIGMA: f64 = 0.002;

const TIME_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GazeError {
    #[error("trajectory too short: {0} usable points, need at least {MIN_PATH_POINTS}")]
    TooShort(usize),
    #[error("capture stop ({stop}) precedes start ({start})")]
    BadMarkers { start: f64, stop: f64 },
    #[error("non-finite coordinate in gaze data")]
    NonFinite,
    #[error("path knots must be distinct consecutive points")]
    DegenerateKnots,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t: f64,
    pub point: Point,
    /// False during blinks or track loss.
    pub valid: bool,
}

impl GazeSample {
    pub fn new(t: f64, point: Point) -> Self {
        Self { t, point, valid: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwellConfig {
    pub radius: f64,
    pub hold: f64,
    pub refractory: f64,
    pub max_invalid_fraction: f64,
}

impl Default for DwellConfig {
    fn default() -> Self {
        Self { radius: 0.05, hold: 0.8, refractory: 1.0, max_invalid_fraction: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellEvent {
    pub t: f64,
    pub point: Point,
    pub region: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct DwellDetector {
    cfg: DwellConfig,
    grid: RegionGrid,
    window: VecDeque<GazeSample>,
    last_t: f64,
    last_event: Option<f64>,
}

impl DwellDetector {
    pub fn new(cfg: DwellConfig, grid: RegionGrid) -> Self {
        Self { cfg, grid, window: VecDeque::new(), last_t: f64::NEG_INFINITY, last_event: None }
    }

    pub fn config(&self) -> &DwellConfig {
        &self.cfg
    }

    /// Feeds one sample. Samples older than the previous one are ignored.
    pub fn push(&mut self, s: GazeSample) -> Option<DwellEvent> {
        if !(s.t.is_finite() && s.t >= self.last_t) || (s.valid && !s.point.is_finite()) {
            return None;
        }
        self.last_t = s.t;
        self.window.push_back(s);
        // keep the newest sample at or before the window start so coverage is measurable
        let start = s.t - self.cfg.hold;
        while self.window.len() > 1 && self.window[1].t <= start + TIME_EPS {
            self.window.pop_front();
        }
        if let Some(prev) = self.last_event {
            if s.t < prev + self.cfg.refractory - TIME_EPS {
                return None;
            }
        }
        if s.t - self.window[0].t < self.cfg.hold - TIME_EPS {
            return None;
        }
        let invalid = self.window.iter().filter(|w| !w.valid).count();
        if invalid as f64 > self.cfg.max_invalid_fraction * self.window.len() as f64 {
            return None;
        }
        let valid: Vec<Point> = self.window.iter().filter(|w| w.valid).map(|w| w.point).collect();
        if valid.is_empty() {
            return None;
        }
        let n = valid.len() as f64;
        let centroid =
            Point::new(valid.iter().map(|p| p.x).sum::<f64>() / n, valid.iter().map(|p| p.y).sum::<f64>() / n);
        if valid.iter().any(|p| p.distance(centroid) > self.cfg.radius) {
            return None;
        }
        self.window.clear();
        self.last_event = Some(s.t);
        Some(DwellEvent { t: s.t, point: centroid, region: self.grid.region_of(centroid).ok() })
    }
}

pub fn dwell_detect(stream: &[GazeSample], cfg: DwellConfig, grid: RegionGrid) -> Vec<DwellEvent> {
    let mut d = DwellDetector::new(cfg, grid);
    stream.iter().filter_map(|s| d.push(*s)).collect()
}

/// Accumulates valid samples between a start and a stop marker.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryCapture {
    active: bool,
    points: Vec<Point>,
}

impl TrajectoryCapture {
    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn begin(&mut self) {
        self.active = true;
        self.points.clear();
    }

    pub fn push(&mut self, s: &GazeSample) {
        if !self.active || !s.valid || !s.point.is_finite() {
            return;
        }
        match self.points.last() {
            Some(last) if last.distance(s.point) < DEDUP_DISTANCE => {}
            _ => self.points.push(s.point),
        }
    }

    pub fn finish(&mut self) -> Result<Vec<Point>, GazeError> {
        self.active = false;
        let pts = std::mem::take(&mut self.points);
        if pts.len() < MIN_PATH_POINTS {
            return Err(GazeError::TooShort(pts.len()));
        }
        Ok(pts)
    }
}

/// Valid samples with `start <= t <= stop`, consecutive near-duplicates dropped.
pub fn capture_trajectory(stream: &[GazeSample], start: f64, stop: f64) -> Result<Vec<Point>, GazeError> {
    if !(start <= stop) {
        return Err(GazeError::BadMarkers { start, stop });
    }
    let mut cap = TrajectoryCapture::default();
    cap.begin();
    for s in stream.iter().filter(|s| s.t >= start && s.t <= stop) {
        cap.push(s);
    }
    cap.finish()
}

/// Simulated eye tracker: the intended gaze point plus isotropic tremor.
#[derive(Debug, Clone)]
pub struct GazeSynth {
    pub rate: f64,
    tremor: Normal<f64>,
    t: f64,
}

impl Default for GazeSynth {
    fn default() -> Self {
        Self::new(DEFAULT_RATE, DEFAULT_TREMOR_SIGMA)
    }
}

impl GazeSynth {
    pub fn new(rate: f64, tremor_sigma: f64) -> Self {
        Self { rate, tremor: Normal::new(0.0, tremor_sigma.max(0.0)).expect("finite sigma"), t: 0.0 }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, target: Point, rng: &mut R) -> GazeSample {
        let p = Point::new(target.x + self.tremor.sample(rng), target.y + self.tremor.sample(rng));
        let s = GazeSample::new(self.t, p);
        self.t += 1.0 / self.rate;
        s
    }

    pub fn fixate<R: Rng + ?Sized>(&mut self, target: Point, duration: f64, rng: &mut R) -> Vec<GazeSample> {
        self.trace(|_| target, duration, rng)
    }

    /// Follows `f(u)` for `u` running from 0 to 1 over `duration`.
    pub fn trace<R: Rng + ?Sized>(&mut self, f: impl Fn(f64) -> Point, duration: f64, rng: &mut R) -> Vec<GazeSample> {
        let n = (duration * self.rate).round() as usize;
        (0..n)
            .map(|i| {
                let u = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                self.sample(f(u), rng)
            })
            .collect()
    }
}
