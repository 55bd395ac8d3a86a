//! Planar world types shared by every subsystem: poses, twists, the field
//! rectangle and the selection grid laid over it.
//!
//! Field frame: origin at the top-left corner, x to the right, y downward.
//! This is the same orientation TUIO uses for normalized coordinates, so
//! tracker output needs no axis flip.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("non-finite value: {0}")]
    NonFinite(f64),
    #[error("point ({x:.4}, {y:.4}) lies outside the field")]
    OutOfField { x: f64, y: f64 },
    #[error("region {0} does not exist in this grid")]
    NoSuchRegion(usize),
    #[error("invalid field configuration: {0}")]
    InvalidField(String),
}

/// Wrap an angle into (-π, π].
pub fn normalize_angle(theta: f64) -> Result<f64, WorldError> {
    if !theta.is_finite() {
        return Err(WorldError::NonFinite(theta));
    }
    let mut r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    // rem_euclid may round up to exactly 2π for tiny negative inputs
    if r <= -PI {
        r += 2.0 * PI;
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    /// Builds a pose with the heading wrapped into (-π, π].
    pub fn new(x: f64, y: f64, theta: f64) -> Result<Self, WorldError> {
        for v in [x, y] {
            if !v.is_finite() {
                return Err(WorldError::NonFinite(v));
            }
        }
        Ok(Self { x, y, theta: normalize_angle(theta)? })
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Planar velocity. Whether it is body or world frame depends on the caller.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist { vx: 0.0, vy: 0.0, omega: 0.0 };

    pub const fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Self { vx, vy, omega }
    }

    pub fn linear_speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.omega.is_finite()
    }

    pub fn scaled(&self, k: f64) -> Twist {
        Twist::new(self.vx * k, self.vy * k, self.omega * k)
    }

    /// Rotates the linear part by `angle` (body → world when `angle` is the heading).
    pub fn rotated(&self, angle: f64) -> Twist {
        let (s, c) = angle.sin_cos();
        Twist::new(c * self.vx - s * self.vy, s * self.vx + c * self.vy, self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldConfig {
    pub width: f64,
    pub height: f64,
    pub cell_rows: u32,
    pub cell_cols: u32,
    pub boundary_margin: f64,
}

/// One 55-inch 16:9 display cell.
pub const CELL_WIDTH: f64 = 1.21;
pub const CELL_HEIGHT: f64 = 0.68;

impl Default for FieldConfig {
    fn default() -> Self {
        Self { width: 2.0 * CELL_WIDTH, height: 2.0 * CELL_HEIGHT, cell_rows: 2, cell_cols: 2, boundary_margin: 0.05 }
    }
}

impl FieldConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(WorldError::InvalidField(format!("width must be > 0, got {}", self.width)));
        }
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(WorldError::InvalidField(format!("height must be > 0, got {}", self.height)));
        }
        if !(self.boundary_margin.is_finite() && self.boundary_margin >= 0.0) {
            return Err(WorldError::InvalidField(format!(
                "boundary margin must be >= 0, got {}",
                self.boundary_margin
            )));
        }
        if 2.0 * self.boundary_margin >= self.width.min(self.height) {
            return Err(WorldError::InvalidField("boundary margin leaves no usable area".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    /// True when `p` is at least `boundary_margin` away from every edge.
    pub fn contains_with_margin(&self, p: Point) -> bool {
        let m = self.boundary_margin;
        p.x >= m && p.x <= self.width - m && p.y >= m && p.y <= self.height - m
    }

    pub fn clamp_with_margin(&self, p: Point) -> Point {
        let m = self.boundary_margin;
        Point::new(p.x.clamp(m, self.width - m), p.y.clamp(m, self.height - m))
    }

    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn to_normalized(&self, p: Point) -> Result<(f64, f64), WorldError> {
        if !p.is_finite() {
            return Err(WorldError::NonFinite(if p.x.is_finite() { p.y } else { p.x }));
        }
        if !self.contains(p) {
            return Err(WorldError::OutOfField { x: p.x, y: p.y });
        }
        Ok((p.x / self.width, p.y / self.height))
    }

    pub fn from_normalized(&self, u: f64, v: f64) -> Point {
        Point::new(u * self.width, v * self.height)
    }
}

/// Free-function form of [`FieldConfig::to_normalized`].
pub fn to_normalized(p: Point, field: &FieldConfig) -> Result<(f64, f64), WorldError> {
    field.to_normalized(p)
}

/// Row-major, 1-based grid of selection regions tiling a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub rows: usize,
    pub cols: usize,
    pub origin: Point,
    pub width: f64,
    pub height: f64,
}

pub const SSVEP_GRID_COLS: usize = 8;
pub const SSVEP_GRID_ROWS: usize = 5;

impl RegionGrid {
    pub fn new(rows: usize, cols: usize, origin: Point, width: f64, height: f64) -> Self {
        assert!(rows > 0 && cols > 0, "grid needs at least one cell");
        assert!(width > 0.0 && height > 0.0, "grid extent must be positive");
        Self { rows, cols, origin, width, height }
    }

    /// The 8 × 5 selection grid covering the whole field.
    pub fn ssvep(field: &FieldConfig) -> Self {
        Self::new(SSVEP_GRID_ROWS, SSVEP_GRID_COLS, Point::new(0.0, 0.0), field.width, field.height)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cell_size(&self) -> (f64, f64) {
        (self.width / self.cols as f64, self.height / self.rows as f64)
    }

    pub fn region_of(&self, p: Point) -> Result<usize, WorldError> {
        let dx = p.x - self.origin.x;
        let dy = p.y - self.origin.y;
        if !(dx >= 0.0 && dx <= self.width && dy >= 0.0 && dy <= self.height) {
            return Err(WorldError::OutOfField { x: p.x, y: p.y });
        }
        let (cw, ch) = self.cell_size();
        // the closing edges belong to the last row/column
        let col = ((dx / cw).floor() as usize).min(self.cols - 1);
        let row = ((dy / ch).floor() as usize).min(self.rows - 1);
        Ok(row * self.cols + col + 1)
    }

    pub fn region_center(&self, region: usize) -> Result<Point, WorldError> {
        if region == 0 || region > self.len() {
            return Err(WorldError::NoSuchRegion(region));
        }
        let idx = region - 1;
        let (row, col) = (idx / self.cols, idx % self.cols);
        let (cw, ch) = self.cell_size();
        Ok(Point::new(self.origin.x + (col as f64 + 0.5) * cw, self.origin.y + (row as f64 + 0.5) * ch))
    }
}

/// Free-function form of [`RegionGrid::region_of`].
pub fn region_of(p: Point, grid: &RegionGrid) -> Result<usize, WorldError> {
    grid.region_of(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub id: u32,
    pub pose: Pose,
    pub twist_body: Twist,
    pub wheel_speeds: [f64; 3],
    pub radius: f64,
}

impl RobotState {
    pub fn at_rest(id: u32, pose: Pose, radius: f64) -> Self {
        Self { id, pose, twist_body: Twist::ZERO, wheel_speeds: [0.0; 3], radius }
    }

    pub fn position(&self) -> Point {
        self.pose.position()
    }

    pub fn world_twist(&self) -> Twist {
        self.twist_body.rotated(self.pose.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_angle_examples() {
        assert_eq!(normalize_angle(0.0).unwrap(), 0.0);
        assert!((normalize_angle(3.0 * PI).unwrap() - PI).abs() < 1e-12);
        assert_eq!(normalize_angle(-PI).unwrap(), PI);
        assert!(normalize_angle(f64::NAN).is_err());
        assert!(normalize_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn region_examples() {
        let field = FieldConfig::default();
        let grid = RegionGrid::ssvep(&field);
        assert_eq!(grid.len(), 40);
        let (cw, ch) = (field.width / 8.0, field.height / 5.0);
        assert_eq!(grid.region_of(Point::new(cw / 2.0, ch / 2.0)).unwrap(), 1);
        // row 4, col 2 (1-based)
        assert_eq!(grid.region_of(Point::new(1.5 * cw, 3.5 * ch)).unwrap(), 26);
        assert_eq!(grid.region_of(Point::new(field.width - 1e-6, field.height - 1e-6)).unwrap(), 40);
        assert_eq!(grid.region_of(Point::new(field.width, field.height)).unwrap(), 40);
        assert!(matches!(grid.region_of(Point::new(-0.1, 0.2)), Err(WorldError::OutOfField { .. })));
        assert!(grid.region_center(0).is_err());
        assert!(grid.region_center(41).is_err());
    }

    #[test]
    fn region_center_round_trips() {
        let grid = RegionGrid::ssvep(&FieldConfig::default());
        for k in 1..=grid.len() {
            assert_eq!(grid.region_of(grid.region_center(k).unwrap()).unwrap(), k);
        }
    }

    #[test]
    fn normalized_examples() {
        let f = FieldConfig::default();
        assert_eq!(f.to_normalized(Point::new(0.0, 0.0)).unwrap(), (0.0, 0.0));
        let (u, v) = f.to_normalized(Point::new(2.42, 1.36)).unwrap();
        assert!((u - 1.0).abs() < 1e-15 && (v - 1.0).abs() < 1e-15);
        let (u, v) = f.to_normalized(Point::new(1.21, 0.68)).unwrap();
        assert!((u - 0.5).abs() < 1e-15 && (v - 0.5).abs() < 1e-15);
        assert!(f.to_normalized(Point::new(2.5, 0.1)).is_err());
    }

    #[test]
    fn field_validation() {
        assert!(FieldConfig::default().validate().is_ok());
        let bad = FieldConfig { width: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = FieldConfig { boundary_margin: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn twist_rotation() {
        let t = Twist::new(0.1, 0.0, 0.0).rotated(PI / 2.0);
        assert!(t.vx.abs() < 1e-15 && (t.vy - 0.1).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent_and_congruent(theta in -1e4f64..1e4) {
            let a = normalize_angle(theta).unwrap();
            prop_assert!(a > -PI && a <= PI);
            prop_assert_eq!(normalize_angle(a).unwrap(), a);
            let k = ((theta - a) / (2.0 * PI)).round();
            prop_assert!((theta - a - k * 2.0 * PI).abs() < 1e-9);
        }

        #[test]
        fn normalized_round_trip(x in 0.0f64..=2.42, y in 0.0f64..=1.36) {
            let f = FieldConfig::default();
            let (u, v) = f.to_normalized(Point::new(x, y)).unwrap();
            prop_assert!((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v));
            let p = f.from_normalized(u, v);
            prop_assert!((p.x - x).abs() <= 1e-12 && (p.y - y).abs() <= 1e-12);
        }
    }
}
