//! Kinematic model of the three-omni-wheel robot.
//!
//! Wheel `i` sits at mounting angle `θi` on a circle of radius `R`; its rolling
//! direction is tangent to that circle. With body twist `[vx, vy, ω]` and wheel
//! radius `r`:
//!
//! ```text
//! u = (1/r) · J · [vx, vy, ω]ᵀ,   row i of J = [-sin θi, cos θi, R]
//! ```

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{normalize_angle, Pose, RobotState, Twist};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobotError {
    #[error("kinematic configuration is invalid: {0}")]
    Config(String),
    #[error("non-finite velocity command")]
    NonFiniteCommand,
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KinematicParams {
    /// Mounting angles in radians.
    pub wheel_angles: [f64; 3],
    pub chassis_radius: f64,
    pub wheel_radius: f64,
    pub max_wheel_speed: f64,
    pub max_body_speed: f64,
    pub max_body_omega: f64,
}

impl Default for KinematicParams {
    fn default() -> Self {
        Self {
            wheel_angles: [90f64.to_radians(), 210f64.to_radians(), 330f64.to_radians()],
            chassis_radius: 0.055,
            wheel_radius: 0.024,
            max_wheel_speed: 20.0,
            max_body_speed: 0.3,
            max_body_omega: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelSpeeds(pub [f64; 3]);

impl WheelSpeeds {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, u| m.max(u.abs()))
    }
}

/// Precomputed forward and inverse wheel maps for one parameter set.
#[derive(Debug, Clone)]
pub struct Kinematics {
    params: KinematicParams,
    jacobian: Matrix3<f64>,
    jacobian_inv: Matrix3<f64>,
}

impl Kinematics {
    pub fn new(params: KinematicParams) -> Result<Self, RobotError> {
        let positive = [
            ("chassis_radius", params.chassis_radius),
            ("wheel_radius", params.wheel_radius),
            ("max_wheel_speed", params.max_wheel_speed),
            ("max_body_speed", params.max_body_speed),
            ("max_body_omega", params.max_body_omega),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(RobotError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        let a = params.wheel_angles;
        if a.iter().any(|x| !x.is_finite()) {
            return Err(RobotError::Config("wheel angles must be finite".into()));
        }
        let r = params.chassis_radius;
        let jacobian = Matrix3::new(-a[0].sin(), a[0].cos(), r, -a[1].sin(), a[1].cos(), r, -a[2].sin(), a[2].cos(), r);
        // scale-aware singularity test: det relative to the row norms
        let scale: f64 = jacobian.row_iter().map(|row| row.norm()).product();
        if jacobian.determinant().abs() < 1e-9 * scale {
            return Err(RobotError::Config("wheel layout gives a singular kinematic matrix".into()));
        }
        let jacobian_inv =
            jacobian.try_inverse().ok_or_else(|| RobotError::Config("kinematic matrix is not invertible".into()))?;
        Ok(Self { params, jacobian, jacobian_inv })
    }

    pub fn params(&self) -> &KinematicParams {
        &self.params
    }

    pub fn inverse(&self, twist_body: Twist) -> WheelSpeeds {
        let u = self.jacobian * Vector3::new(twist_body.vx, twist_body.vy, twist_body.omega) / self.params.wheel_radius;
        WheelSpeeds([u[0], u[1], u[2]])
    }

    pub fn forward(&self, wheels: WheelSpeeds) -> Twist {
        let t = self.jacobian_inv * Vector3::from(wheels.0) * self.params.wheel_radius;
        Twist::new(t[0], t[1], t[2])
    }

    /// Scales the command down by a single non-negative factor until body
    /// speed, turn rate and every wheel speed are within limits.
    pub fn clamp(&self, cmd: Twist) -> Twist {
        let p = &self.params;
        let mut k: f64 = 1.0;
        let speed = cmd.linear_speed();
        if speed > p.max_body_speed {
            k = k.min(p.max_body_speed / speed);
        }
        if cmd.omega.abs() > p.max_body_omega {
            k = k.min(p.max_body_omega / cmd.omega.abs());
        }
        let wheel = self.inverse(cmd.scaled(k)).max_abs();
        if wheel > p.max_wheel_speed {
            k *= p.max_wheel_speed / wheel;
        }
        cmd.scaled(k)
    }

    /// Advances one robot by `dt` under body-frame command `cmd` (explicit Euler).
    pub fn step(&self, state: &RobotState, cmd: Twist, dt: f64) -> Result<RobotState, RobotError> {
        if !cmd.is_finite() {
            return Err(RobotError::NonFiniteCommand);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(RobotError::BadTimeStep(dt));
        }
        let clamped = self.clamp(cmd);
        let wheels = self.inverse(clamped);
        let twist_body = self.forward(wheels);
        let world = twist_body.rotated(state.pose.theta);
        let theta = normalize_angle(state.pose.theta + world.omega * dt).map_err(|_| RobotError::NonFiniteCommand)?;
        Ok(RobotState {
            id: state.id,
            pose: Pose { x: state.pose.x + world.vx * dt, y: state.pose.y + world.vy * dt, theta },
            twist_body,
            wheel_speeds: wheels.0,
            radius: state.radius,
        })
    }
}

pub fn inverse_kinematics(twist_body: Twist, params: &KinematicParams) -> Result<WheelSpeeds, RobotError> {
    Ok(Kinematics::new(*params)?.inverse(twist_body))
}

pub fn forward_kinematics(wheels: WheelSpeeds, params: &KinematicParams) -> Result<Twist, RobotError> {
    Ok(Kinematics::new(*params)?.forward(wheels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn kin() -> Kinematics {
        Kinematics::new(KinematicParams::default()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pure_rotation() {
        let k = kin();
        let p = k.params();
        let u = k.inverse(Twist::new(0.0, 0.0, 2.0));
        for ui in u.0 {
            assert!(close(ui, p.chassis_radius * 2.0 / p.wheel_radius, 1e-12));
        }
        let w = p.chassis_radius / p.wheel_radius;
        let t = k.forward(WheelSpeeds([w, w, w]));
        assert!(close(t.vx, 0.0, 1e-12) && close(t.vy, 0.0, 1e-12) && close(t.omega, 1.0, 1e-12));
    }

    #[test]
    fn pure_translation() {
        let k = kin();
        let r = k.params().wheel_radius;
        let u = k.inverse(Twist::new(1.0, 0.0, 0.0));
        let want = [-1.0 / r, 0.5 / r, 0.5 / r];
        for (a, b) in u.0.iter().zip(want) {
            assert!(close(*a, b, 1e-12), "{a} vs {b}");
        }
        assert_eq!(k.inverse(Twist::ZERO).0, [0.0; 3]);
    }

    #[test]
    fn singular_layout_rejected() {
        let p = KinematicParams { wheel_angles: [0.0, 0.0, 1.0], ..Default::default() };
        assert!(Kinematics::new(p).is_err());
        let p = KinematicParams { wheel_radius: 0.0, ..Default::default() };
        assert!(Kinematics::new(p).is_err());
    }

    #[test]
    fn euler_step_examples() {
        let k = kin();
        let s = RobotState::at_rest(1, Pose::default(), 0.022);
        let n = k.step(&s, Twist::new(0.1, 0.0, 0.0), 0.02).unwrap();
        assert!(close(n.pose.x, 0.002, 1e-12) && close(n.pose.y, 0.0, 1e-12));

        let s = RobotState::at_rest(1, Pose::new(0.0, 0.0, PI / 2.0).unwrap(), 0.022);
        let n = k.step(&s, Twist::new(0.1, 0.0, 0.0), 0.02).unwrap();
        assert!(close(n.pose.y, 0.002, 1e-12) && close(n.pose.x, 0.0, 1e-12));
    }

    #[test]
    fn radial_clamp() {
        let k = kin();
        let s = RobotState::at_rest(1, Pose::default(), 0.022);
        let cmd = Twist::new(0.6, 0.8, 0.0);
        let n = k.step(&s, cmd, 0.02).unwrap();
        assert!(close(n.twist_body.linear_speed(), 0.3, 1e-12));
        assert!(close(n.twist_body.vx / n.twist_body.vy, 0.75, 1e-12));
    }

    #[test]
    fn bad_inputs() {
        let k = kin();
        let s = RobotState::at_rest(1, Pose::default(), 0.022);
        assert_eq!(k.step(&s, Twist::new(f64::NAN, 0.0, 0.0), 0.02), Err(RobotError::NonFiniteCommand));
        assert!(matches!(k.step(&s, Twist::ZERO, 0.0), Err(RobotError::BadTimeStep(_))));
    }

    #[test]
    fn rotation_returns_heading() {
        let k = kin();
        let omega = 1.0;
        let dt = 0.02;
        let steps = (2.0 * PI / omega / dt).round() as usize;
        let mut s = RobotState::at_rest(1, Pose::new(1.0, 0.5, 0.3).unwrap(), 0.022);
        for _ in 0..steps {
            s = k.step(&s, Twist::new(0.0, 0.0, omega), dt).unwrap();
        }
        let err = normalize_angle(s.pose.theta - 0.3).unwrap().abs();
        assert!(err <= omega * dt, "heading error {err}");
    }

    proptest! {
        #[test]
        fn round_trips(vx in -1.0f64..1.0, vy in -1.0f64..1.0, w in -5.0f64..5.0) {
            let k = kin();
            let t = Twist::new(vx, vy, w);
            let back = k.forward(k.inverse(t));
            prop_assert!(close(back.vx, vx, 1e-12) && close(back.vy, vy, 1e-12) && close(back.omega, w, 1e-12));
            let u = WheelSpeeds([vx * 20.0, vy * 20.0, w]);
            let again = k.inverse(k.forward(u));
            for (a, b) in again.0.iter().zip(u.0) {
                prop_assert!(close(*a, b, 1e-12));
            }
        }

        #[test]
        fn clamp_preserves_direction(vx in -3.0f64..3.0, vy in -3.0f64..3.0, w in -20.0f64..20.0) {
            let k = kin();
            let cmd = Twist::new(vx, vy, w);
            let c = k.clamp(cmd);
            let p = k.params();
            prop_assert!(c.linear_speed() <= p.max_body_speed + 1e-12);
            prop_assert!(c.omega.abs() <= p.max_body_omega + 1e-12);
            prop_assert!(k.inverse(c).max_abs() <= p.max_wheel_speed + 1e-9);
            // c = s · cmd with s in [0, 1]
            let s = if cmd.vx.abs() > 1e-9 { c.vx / cmd.vx } else if cmd.vy.abs() > 1e-9 { c.vy / cmd.vy } else { 1.0 };
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
            prop_assert!(close(c.vx, s * cmd.vx, 1e-12) && close(c.vy, s * cmd.vy, 1e-12) && close(c.omega, s * cmd.omega, 1e-9));
        }
    }
}
