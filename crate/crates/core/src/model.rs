//! Discrete-time robot dynamics and lattice state types.
//!
//! The planning state is `(x, y, theta)` and the control is `(v, omega)`.
//! Controls are held constant over a step of length `dt` and integrated
//! exactly along the resulting circular arc, so re-integrating a control
//! sequence with any sub-step reproduces the same end pose.

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2};
use nalgebra::{Matrix3, Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type State3 = Vector3<f64>;
pub type Cov3 = Matrix3<f64>;
pub type Control = Vector2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Differential drive; in-place rotation allowed.
    Unicycle,
    /// Forward-only car-like motion with a minimum turning radius.
    AckermannLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub kind: ModelKind,
    pub v_max: f64,
    pub omega_max: f64,
    #[serde(default)]
    pub min_turn_radius: f64,
    pub dt: f64,
}

impl RobotModel {
    pub fn unicycle(v_max: f64, omega_max: f64, dt: f64) -> Self {
        Self { kind: ModelKind::Unicycle, v_max, omega_max, min_turn_radius: 0.0, dt }
    }

    pub fn ackermann(v_max: f64, omega_max: f64, min_turn_radius: f64, dt: f64) -> Self {
        Self { kind: ModelKind::AckermannLike, v_max, omega_max, min_turn_radius, dt }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidModel(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.v_max > 0.0) || !(self.omega_max > 0.0) {
            return Err(Error::InvalidModel("speed limits must be positive".into()));
        }
        if self.kind == ModelKind::AckermannLike && self.min_turn_radius < 0.0 {
            return Err(Error::InvalidModel("negative turning radius".into()));
        }
        Ok(())
    }

    /// Whether a constant control respects the model limits.
    pub fn admissible(&self, u: &Control) -> bool {
        let tol = 1e-9;
        let (v, w) = (u[0], u[1]);
        if v.abs() > self.v_max + tol || w.abs() > self.omega_max + tol {
            return false;
        }
        match self.kind {
            ModelKind::Unicycle => v >= -tol,
            ModelKind::AckermannLike => {
                v > tol && (self.min_turn_radius == 0.0 || w.abs() * self.min_turn_radius <= v + tol)
            }
        }
    }

    /// Transition function `x_{t+1} = f(x_t, u_t)` over one step.
    pub fn step(&self, x: &State3, u: &Control) -> State3 {
        step_exact(x, u, self.dt)
    }

    /// Analytic Jacobians `(df/dx, df/du)` at `(x, u)`.
    pub fn linearize(&self, x: &State3, u: &Control) -> (Matrix3<f64>, Matrix3x2<f64>) {
        linearize_exact(x, u, self.dt)
    }
}

/// Exact integration of constant `(v, omega)` over `dt`.
pub fn step_exact(x: &State3, u: &Control, dt: f64) -> State3 {
    let (dx, dy) = arc_displacement(x[2], u[0], u[1], dt);
    State3::new(x[0] + dx, x[1] + dy, x[2] + u[1] * dt)
}

const SMALL_TURN: f64 = 1e-4;

fn arc_displacement(theta: f64, v: f64, w: f64, dt: f64) -> (f64, f64) {
    let phi = w * dt;
    if phi.abs() < SMALL_TURN {
        // chord along the mid heading; error O(v dt phi^2)
        let m = theta + phi / 2.0;
        let chord = v * dt * (1.0 - phi * phi / 24.0);
        (chord * m.cos(), chord * m.sin())
    } else {
        (v / w * ((theta + phi).sin() - theta.sin()), v / w * (theta.cos() - (theta + phi).cos()))
    }
}

fn linearize_exact(x: &State3, u: &Control, dt: f64) -> (Matrix3<f64>, Matrix3x2<f64>) {
    let theta = x[2];
    let (v, w) = (u[0], u[1]);
    let (dx, dy) = arc_displacement(theta, v, w, dt);
    let a = Matrix3::new(1.0, 0.0, -dy, 0.0, 1.0, dx, 0.0, 0.0, 1.0);
    let phi = w * dt;
    let (dxdv, dydv, dxdw, dydw);
    if phi.abs() < SMALL_TURN {
        let m = theta + phi / 2.0;
        let c = 1.0 - phi * phi / 24.0;
        dxdv = dt * c * m.cos();
        dydv = dt * c * m.sin();
        // derivative of chord * (cos m, sin m) with respect to omega
        let dc = -phi * dt / 12.0;
        dxdw = v * dt * (dc * m.cos() - c * m.sin() * dt / 2.0);
        dydw = v * dt * (dc * m.sin() + c * m.cos() * dt / 2.0);
    } else {
        let s0 = theta.sin();
        let c0 = theta.cos();
        let s1 = (theta + phi).sin();
        let c1 = (theta + phi).cos();
        dxdv = (s1 - s0) / w;
        dydv = (c0 - c1) / w;
        dxdw = -v / (w * w) * (s1 - s0) + v / w * c1 * dt;
        dydw = -v / (w * w) * (c0 - c1) + v / w * s1 * dt;
    }
    let b = Matrix3x2::new(dxdv, dxdw, dydv, dydw, 0.0, dt);
    (a, b)
}

/// Geometry of the regular lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Position resolution (m).
    pub resolution: f64,
    /// Number of discrete headings `H`.
    pub headings: u16,
}

impl LatticeSpec {
    pub fn heading_angle(&self, index: i32) -> f64 {
        wrap_angle(index as f64 * 2.0 * PI / self.headings as f64)
    }

    pub fn pose(&self, s: &LatticeState) -> Pose2 {
        Pose2::new(s.ix as f64 * self.resolution, s.iy as f64 * self.resolution, self.heading_angle(s.ith as i32))
    }

    pub fn heading_index(&self, theta: f64) -> u16 {
        let step = 2.0 * PI / self.headings as f64;
        let k = (theta / step).round() as i64;
        k.rem_euclid(self.headings as i64) as u16
    }

    /// Nearest lattice state to a world pose.
    pub fn snap(&self, pose: &Pose2) -> LatticeState {
        LatticeState::new(
            (pose.x / self.resolution).round() as i32,
            (pose.y / self.resolution).round() as i32,
            self.heading_index(pose.theta),
        )
    }
}

/// A lattice state. Velocities are collapsed to a single cruise value, so
/// `iv` and `iw` are 0 unless a model declares more velocity levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeState {
    pub ix: i32,
    pub iy: i32,
    pub ith: u16,
    #[serde(default)]
    pub iv: u8,
    #[serde(default)]
    pub iw: u8,
}

impl LatticeState {
    pub const fn new(ix: i32, iy: i32, ith: u16) -> Self {
        Self { ix, iy, ith, iv: 0, iw: 0 }
    }
}
