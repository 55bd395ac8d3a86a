//! Smoothing, arc-length resampling and a centripetal Catmull-Rom spline with
//! an arc-length lookup table.

use serde::{Deserialize, Serialize};

use super::{GazeError, MIN_PATH_POINTS};
use crate::world::Point;

/// Moving-average window length.
pub const SMOOTHING_WINDOW: usize = 9;
pub const MIN_KNOTS: usize = 16;
/// Upper bound on the spacing between arc-length table entries.
pub const TABLE_RESOLUTION: f64 = 0.001;

/// Centred moving average over up to [`SMOOTHING_WINDOW`] samples. The window
/// shrinks symmetrically near the ends, so the endpoints are kept as they are.
pub fn smooth_points(pts: &[Point]) -> Vec<Point> {
    let n = pts.len();
    let half = SMOOTHING_WINDOW / 2;
    (0..n)
        .map(|i| {
            let k = half.min(i).min(n - 1 - i);
            let win = &pts[i - k..=i + k];
            let m = win.len() as f64;
            Point::new(win.iter().map(|p| p.x).sum::<f64>() / m, win.iter().map(|p| p.y).sum::<f64>() / m)
        })
        .collect()
}

/// `count` points equally spaced along the polyline, first and last included.
pub fn resample_uniform(pts: &[Point], count: usize) -> Vec<Point> {
    let mut cum = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    cum.push(0.0);
    for w in pts.windows(2) {
        acc += w[0].distance(w[1]);
        cum.push(acc);
    }
    let total = acc;
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for k in 0..count {
        if k == count - 1 {
            out.push(*pts.last().expect("non-empty"));
            break;
        }
        let s = total * k as f64 / (count - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let u = if len > 0.0 { ((s - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(pts[seg] + (pts[seg + 1] - pts[seg]) * u);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TableEntry {
    s: f64,
    /// Global spline parameter: segment index plus local parameter.
    g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PathMessage {
    knots: Vec<Point>,
    length: f64,
}

/// Interpolating spline through `knots`, parametrised by arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathMessage", into = "PathMessage")]
pub struct FittedPath {
    knots: Vec<Point>,
    table: Vec<TableEntry>,
}

impl TryFrom<PathMessage> for FittedPath {
    type Error = GazeError;
    fn try_from(m: PathMessage) -> Result<Self, GazeError> {
        FittedPath::from_knots(m.knots)
    }
}

impl From<FittedPath> for PathMessage {
    fn from(p: FittedPath) -> Self {
        let length = p.length();
        PathMessage { knots: p.knots, length }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub point: Point,
    pub tangent: Point,
    /// Set when the requested arc length was outside `[0, L]`.
    pub clamped: bool,
}

fn lerp(a: Point, b: Point, ta: f64, tb: f64, t: f64) -> Point {
    a * ((tb - t) / (tb - ta)) + b * ((t - ta) / (tb - ta))
}

impl FittedPath {
    pub fn from_knots(knots: Vec<Point>) -> Result<Self, GazeError> {
        if knots.iter().any(|p| !p.is_finite()) {
            return Err(GazeError::NonFinite);
        }
        if knots.len() < 2 || knots.windows(2).any(|w| w[0].distance(w[1]) <= 0.0) {
            return Err(GazeError::DegenerateKnots);
        }
        let mut path = Self { knots, table: Vec::new() };
        path.build_table();
        Ok(path)
    }

    pub fn knots(&self) -> &[Point] {
        &self.knots
    }

    pub fn length(&self) -> f64 {
        self.table.last().map_or(0.0, |e| e.s)
    }

    pub fn start(&self) -> Point {
        self.knots[0]
    }

    pub fn end(&self) -> Point {
        *self.knots.last().expect("at least two knots")
    }

    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    fn control(&self, i: isize) -> Point {
        let n = self.knots.len() as isize;
        if i < 0 {
            self.knots[0] * 2.0 - self.knots[1]
        } else if i >= n {
            self.knots[(n - 1) as usize] * 2.0 - self.knots[(n - 2) as usize]
        } else {
            self.knots[i as usize]
        }
    }

    /// Point at global parameter `g` in `[0, segments]`.
    fn eval(&self, g: f64) -> Point {
        let last = self.segments();
        let g = g.clamp(0.0, last as f64);
        let seg = (g.floor() as usize).min(last - 1);
        let u = g - seg as f64;
        if u == 0.0 {
            return self.knots[seg];
        }
        if u == 1.0 {
            return self.knots[seg + 1];
        }
        let i = seg as isize;
        let (p0, p1, p2, p3) = (self.control(i - 1), self.control(i), self.control(i + 1), self.control(i + 2));
        let t0 = 0.0;
        let t1 = t0 + p0.distance(p1).sqrt();
        let t2 = t1 + p1.distance(p2).sqrt();
        let t3 = t2 + p2.distance(p3).sqrt();
        let t = t1 + u * (t2 - t1);
        let a1 = lerp(p0, p1, t0, t1, t);
        let a2 = lerp(p1, p2, t1, t2, t);
        let a3 = lerp(p2, p3, t2, t3, t);
        let b1 = lerp(a1, a2, t0, t2, t);
        let b2 = lerp(a2, a3, t1, t3, t);
        lerp(b1, b2, t1, t2, t)
    }

    fn build_table(&mut self) {
        // half-resolution substeps keep entries under the resolution on curved spans
        let mut table = vec![TableEntry { s: 0.0, g: 0.0 }];
        let mut prev = self.knots[0];
        let mut s = 0.0;
        for seg in 0..self.segments() {
            let chord = self.knots[seg].distance(self.knots[seg + 1]);
            let steps = ((2.0 * chord / TABLE_RESOLUTION).ceil() as usize).max(4);
            for k in 1..=steps {
                let g = seg as f64 + k as f64 / steps as f64;
                let p = self.eval(g);
                s += prev.distance(p);
                prev = p;
                table.push(TableEntry { s, g });
            }
        }
        self.table = table;
    }

    fn param_at(&self, s: f64) -> f64 {
        let i = self.table.partition_point(|e| e.s < s);
        if i == 0 {
            return 0.0;
        }
        if i >= self.table.len() {
            return self.segments() as f64;
        }
        let (a, b) = (self.table[i - 1], self.table[i]);
        if b.s <= a.s {
            return b.g;
        }
        a.g + (s - a.s) / (b.s - a.s) * (b.g - a.g)
    }

    pub fn sample(&self, s: f64) -> PathSample {
        let len = self.length();
        let clamped = !(0.0..=len).contains(&s);
        let s = if s.is_nan() { 0.0 } else { s.clamp(0.0, len) };
        let g = self.param_at(s);
        let point = self.eval(g);
        let h = 1e-6;
        let (lo, hi) = ((g - h).max(0.0), (g + h).min(self.segments() as f64));
        let d = self.eval(hi) - self.eval(lo);
        let tangent = if d.norm() > 0.0 {
            d * (1.0 / d.norm())
        } else {
            let seg = (g.floor() as usize).min(self.segments() - 1);
            let c = self.knots[seg + 1] - self.knots[seg];
            c * (1.0 / c.norm())
        };
        PathSample { point, tangent, clamped }
    }
}

/// Smooth, resample to `max(16, n/4)` knots and fit the spline.
pub fn fit_trajectory(raw: &[Point]) -> Result<FittedPath, GazeError> {
    if raw.len() < MIN_PATH_POINTS {
        return Err(GazeError::TooShort(raw.len()));
    }
    if raw.iter().any(|p| !p.is_finite()) {
        return Err(GazeError::NonFinite);
    }
    let smooth = smooth_points(raw);
    let polyline: f64 = smooth.windows(2).map(|w| w[0].distance(w[1])).sum();
    if polyline <= 0.0 {
        return Err(GazeError::TooShort(1));
    }
    let knots = resample_uniform(&smooth, MIN_KNOTS.max(raw.len() / 4));
    FittedPath::from_knots(knots)
}

pub fn sample_path(path: &FittedPath, s: f64) -> PathSample {
    path.sample(s)
}
