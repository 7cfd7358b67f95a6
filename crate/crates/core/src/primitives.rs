//! Motion primitive generation, storage and grouping.
//!
//! Primitives are produced by single shooting over a three-parameter control
//! law: constant speed along a path whose curvature follows the cubic
//! `k(s) = s(1 - s)(a + b s)` in normalized arc length `s`, plus the path length.
//! The curvature vanishes at both ends, so consecutive primitives join with
//! zero angular velocity. A damped Newton iteration drives the endpoint residual
//! to zero for a fixed number of steps; the step count is then the smallest one
//! that respects the speed and turn-rate limits.

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2};
use crate::model::{step_exact, Control, LatticeSpec, LatticeState, ModelKind, RobotModel, State3};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

pub const PRIMITIVE_FILE_VERSION: u32 = 1;
const MAX_NEWTON_ITERATIONS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub id: u32,
    /// Start state; position is always the origin.
    pub start: LatticeState,
    /// End state relative to the start position.
    pub end: LatticeState,
    /// `(v, omega)` per step of `dt`.
    pub controls: Vec<[f64; 2]>,
    pub duration: f64,
    /// Poses at every step boundary, relative to the start position
    /// (`controls.len() + 1` entries; headings are not wrapped).
    pub poses: Vec<Pose2>,
    pub length: f64,
}

impl MotionPrimitive {
    pub fn control(&self, k: usize) -> Control {
        Control::new(self.controls[k][0], self.controls[k][1])
    }

    /// Poses translated to start at lattice state `at`.
    pub fn anchored_poses(&self, lattice: &LatticeSpec, at: &LatticeState) -> Vec<Pose2> {
        let ox = at.ix as f64 * lattice.resolution;
        let oy = at.iy as f64 * lattice.resolution;
        self.poses.iter().map(|p| Pose2::new(p.x + ox, p.y + oy, p.theta)).collect()
    }

    /// Lattice state reached when the primitive is applied at `at`.
    pub fn apply(&self, at: &LatticeState) -> LatticeState {
        LatticeState::new(at.ix + self.end.ix, at.iy + self.end.iy, self.end.ith)
    }

    pub fn group_key(&self) -> GroupKey {
        GroupKey {
            start_heading: self.start.ith,
            start_v: self.start.iv,
            start_w: self.start.iw,
            end_heading: self.end.ith,
            end_v: self.end.iv,
            end_w: self.end.iw,
        }
    }

    /// Rotates the primitive by `quarter_turns * 90` degrees.
    fn rotated(&self, quarter_turns: u16, headings: u16) -> MotionPrimitive {
        let rot = |x: f64, y: f64| -> (f64, f64) {
            match quarter_turns % 4 {
                0 => (x, y),
                1 => (-y, x),
                2 => (-x, -y),
                _ => (y, -x),
            }
        };
        let rot_i = |x: i32, y: i32| -> (i32, i32) {
            match quarter_turns % 4 {
                0 => (x, y),
                1 => (-y, x),
                2 => (-x, -y),
                _ => (y, -x),
            }
        };
        let shift = quarter_turns * headings / 4;
        let dtheta = quarter_turns as f64 * PI / 2.0;
        let (ex, ey) = rot_i(self.end.ix, self.end.iy);
        MotionPrimitive {
            id: self.id,
            start: LatticeState::new(0, 0, (self.start.ith + shift) % headings),
            end: LatticeState::new(ex, ey, (self.end.ith + shift) % headings),
            controls: self.controls.clone(),
            duration: self.duration,
            poses: self
                .poses
                .iter()
                .map(|p| {
                    let (x, y) = rot(p.x, p.y);
                    Pose2::new(x, y, p.theta + dtheta)
                })
                .collect(),
            length: self.length,
        }
    }
}

/// `(theta_i, v_i, omega_i, theta_f, v_f, omega_f)` group key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub start_heading: u16,
    pub start_v: u8,
    pub start_w: u8,
    pub end_heading: u16,
    pub end_v: u8,
    pub end_w: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveGroup {
    pub key: GroupKey,
    /// Primitive ids, longest duration first.
    pub members: Vec<u32>,
}

/// Partitions primitives by group key; members sorted by duration, longest first.
pub fn group(primitives: &[MotionPrimitive]) -> Vec<PrimitiveGroup> {
    let mut map: BTreeMap<GroupKey, Vec<&MotionPrimitive>> = BTreeMap::new();
    for p in primitives {
        map.entry(p.group_key()).or_default().push(p);
    }
    map.into_iter()
        .map(|(key, mut ms)| {
            ms.sort_by(|a, b| {
                b.duration
                    .total_cmp(&a.duration)
                    .then(b.length.total_cmp(&a.length))
                    .then(a.id.cmp(&b.id))
            });
            PrimitiveGroup { key, members: ms.into_iter().map(|p| p.id).collect() }
        })
        .collect()
}

fn curvature(a: f64, b: f64, s: f64) -> f64 {
    s * (1.0 - s) * (a + b * s)
}

fn controls_for(params: &Vector3<f64>, n: usize, dt: f64) -> Vec<Control> {
    let (a, b, len) = (params[0], params[1], params[2]);
    let v = len / (n as f64 * dt);
    (0..n)
        .map(|k| {
            let s = (k as f64 + 0.5) / n as f64;
            Control::new(v, v * curvature(a, b, s))
        })
        .collect()
}

fn integrate(start: &State3, controls: &[Control], dt: f64) -> Vec<State3> {
    let mut out = Vec::with_capacity(controls.len() + 1);
    let mut x = *start;
    out.push(x);
    for u in controls {
        x = step_exact(&x, u, dt);
        out.push(x);
    }
    out
}

fn residual(params: &Vector3<f64>, n: usize, dt: f64, theta0: f64, target: &Vector3<f64>) -> Vector3<f64> {
    let start = State3::new(0.0, 0.0, theta0);
    let controls = controls_for(params, n, dt);
    let mut x = start;
    for u in &controls {
        x = step_exact(&x, u, dt);
    }
    Vector3::new(x[0] - target[0], x[1] - target[1], wrap_angle(x[2] - target[2]))
}

/// Damped Newton on the endpoint residual for a fixed step count.
fn shoot(n: usize, dt: f64, theta0: f64, target: &Vector3<f64>, guess: Vector3<f64>) -> Option<Vector3<f64>> {
    let mut p = guess;
    let mut r = residual(&p, n, dt, theta0, target);
    for _ in 0..MAX_NEWTON_ITERATIONS {
        if r.norm() < RESIDUAL_TOL {
            return Some(p);
        }
        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            let h = 1e-7 * p[j].abs().max(1.0);
            let mut pp = p;
            let mut pm = p;
            pp[j] += h;
            pm[j] -= h;
            let d = (residual(&pp, n, dt, theta0, target) - residual(&pm, n, dt, theta0, target)) / (2.0 * h);
            jac.set_column(j, &d);
        }
        let delta = jac.lu().solve(&(-r))?;
        let mut step = 1.0;
        loop {
            let cand = p + delta * step;
            if cand[2] > 0.0 {
                let rc = residual(&cand, n, dt, theta0, target);
                if rc.norm() < r.norm() {
                    p = cand;
                    r = rc;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-6 {
                return None;
            }
        }
    }
    (r.norm() < RESIDUAL_TOL).then_some(p)
}

fn build_primitive(
    lattice: &LatticeSpec,
    start_heading: u16,
    target: &LatticeState,
    controls: Vec<Control>,
    dt: f64,
) -> MotionPrimitive {
    let theta0 = lattice.heading_angle(start_heading as i32);
    let states = integrate(&State3::new(0.0, 0.0, theta0), &controls, dt);
    let length = controls.iter().map(|u| u[0].abs() * dt).sum();
    MotionPrimitive {
        id: 0,
        start: LatticeState::new(0, 0, start_heading),
        end: *target,
        duration: controls.len() as f64 * dt,
        controls: controls.iter().map(|u| [u[0], u[1]]).collect(),
        poses: states.iter().map(|s| Pose2::new(s[0], s[1], s[2])).collect(),
        length,
    }
}

/// Generates a primitive from the origin with heading `start_heading` to the
/// relative lattice state `target`, or `None` when no admissible control
/// sequence is found.
pub fn generate_primitive(
    model: &RobotModel,
    lattice: &LatticeSpec,
    start_heading: u16,
    target: &LatticeState,
) -> Option<MotionPrimitive> {
    let dt = model.dt;
    let theta0 = lattice.heading_angle(start_heading as i32);
    let dtheta = wrap_angle(lattice.heading_angle(target.ith as i32) - theta0);
    let tx = target.ix as f64 * lattice.resolution;
    let ty = target.iy as f64 * lattice.resolution;
    let chord = tx.hypot(ty);

    if chord < 1e-12 {
        if model.kind != ModelKind::Unicycle || dtheta.abs() < 1e-12 {
            return None;
        }
        let n = (dtheta.abs() / (model.omega_max * dt) - 1e-9).ceil().max(1.0) as usize;
        let w = dtheta / (n as f64 * dt);
        let controls = vec![Control::new(0.0, w); n];
        return Some(build_primitive(lattice, start_heading, target, controls, dt));
    }

    // the chord must point forward
    let (c0, s0) = (theta0.cos(), theta0.sin());
    let forward = tx * c0 + ty * s0;
    let lateral = -tx * s0 + ty * c0;
    if forward <= 0.0 {
        return None;
    }
    // linearized initial guess: heading change and lateral offset
    let len0 = chord * (1.0 + 0.1 * (lateral / chord).powi(2) + 0.02 * dtheta.powi(2));
    let m = nalgebra::Matrix2::new(1.0 / 6.0, 1.0 / 12.0, 1.0 / 12.0, 1.0 / 30.0);
    let rhs = nalgebra::Vector2::new(dtheta / len0, lateral / (len0 * len0));
    let ab = m.lu().solve(&rhs)?;
    let mut guess = Vector3::new(ab[0], ab[1], len0);
    let target_v = Vector3::new(tx, ty, theta0 + dtheta);

    let n_min = (len0 / (model.v_max * dt) - 1e-9).ceil().max(1.0) as usize;
    let n_cap = 4 * n_min + 40;
    let mut n = n_min;
    while n <= n_cap {
        let params = shoot(n, dt, theta0, &target_v, guess)?;
        let controls = controls_for(&params, n, dt);
        if controls.iter().all(|u| model.admissible(u)) {
            return Some(build_primitive(lattice, start_heading, target, controls, dt));
        }
        // curvature limits do not depend on the step count
        let max_kappa = controls.iter().map(|u| (u[1] / u[0]).abs()).fold(0.0, f64::max);
        if model.kind == ModelKind::AckermannLike
            && model.min_turn_radius > 0.0
            && max_kappa * model.min_turn_radius > 1.0 + 1e-9
        {
            return None;
        }
        guess = params;
        n += 1;
    }
    None
}

/// A complete, rotation-closed control set.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveSet {
    pub model: RobotModel,
    pub lattice: LatticeSpec,
    pub lengths: Vec<f64>,
    primitives: Vec<MotionPrimitive>,
    groups: Vec<PrimitiveGroup>,
    groups_by_heading: Vec<Vec<usize>>,
    by_heading: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct PrimitiveSetFile {
    version: u32,
    model: RobotModel,
    lattice: LatticeSpec,
    lengths: Vec<f64>,
    primitives: Vec<MotionPrimitive>,
}

impl PrimitiveSet {
    pub fn new(model: RobotModel, lattice: LatticeSpec, lengths: Vec<f64>, mut primitives: Vec<MotionPrimitive>) -> Self {
        for (i, p) in primitives.iter_mut().enumerate() {
            p.id = i as u32;
        }
        let groups = group(&primitives);
        let mut groups_by_heading = vec![Vec::new(); lattice.headings as usize];
        for (gi, g) in groups.iter().enumerate() {
            groups_by_heading[g.key.start_heading as usize].push(gi);
        }
        let mut by_heading = vec![Vec::new(); lattice.headings as usize];
        for p in &primitives {
            by_heading[p.start.ith as usize].push(p.id);
        }
        Self { model, lattice, lengths, primitives, groups, groups_by_heading, by_heading }
    }

    pub fn primitives(&self) -> &[MotionPrimitive] {
        &self.primitives
    }

    pub fn primitive(&self, id: u32) -> &MotionPrimitive {
        &self.primitives[id as usize]
    }

    pub fn groups(&self) -> &[PrimitiveGroup] {
        &self.groups
    }

    /// Groups whose start key matches heading `ith`, in key order.
    pub fn groups_from(&self, ith: u16) -> impl Iterator<Item = &PrimitiveGroup> {
        self.groups_by_heading[ith as usize].iter().map(move |&g| &self.groups[g])
    }

    pub fn from_heading(&self, ith: u16) -> impl Iterator<Item = &MotionPrimitive> {
        self.by_heading[ith as usize].iter().map(move |&i| &self.primitives[i as usize])
    }

    /// Finest primitive length scale.
    pub fn f_plus(&self) -> f64 {
        self.lengths.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_length(&self) -> f64 {
        self.primitives.iter().map(|p| p.length).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        let file = PrimitiveSetFile {
            version: PRIMITIVE_FILE_VERSION,
            model: self.model,
            lattice: self.lattice,
            lengths: self.lengths.clone(),
            primitives: self.primitives.clone(),
        };
        serde_json::to_string(&file).expect("primitive set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PrimitiveSetFile = serde_json::from_str(text)?;
        if file.version != PRIMITIVE_FILE_VERSION {
            return Err(Error::Scenario(format!("unsupported primitive file version {}", file.version)));
        }
        file.model.validate()?;
        Ok(Self::new(file.model, file.lattice, file.lengths, file.primitives))
    }

    /// SHA-256 of the serialized set, hex encoded.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Enumerates lattice targets for every canonical start heading and length
/// scale, shoots a primitive to each, and closes the set under quarter turns.
///
/// For each length scale the targets are a straight move (same heading) and
/// turns of one and two heading steps either way. The endpoint is the lattice
/// point nearest the chord of the ideal maneuver; if that endpoint is not
/// reachable the chord is lengthened one lattice step at a time. Unicycle
/// models also get in-place rotations by one heading step.
pub fn build_control_set(model: &RobotModel, lattice: &LatticeSpec, lengths: &[f64]) -> Result<PrimitiveSet> {
    model.validate()?;
    if lengths.is_empty() || lengths.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidModel("length scales must be positive".into()));
    }
    let mut lengths = lengths.to_vec();
    lengths.sort_by(f64::total_cmp);
    let h = lattice.headings;
    let quarter = h.is_multiple_of(4);
    let canonical: Vec<u16> = if quarter { (0..h / 4).collect() } else { (0..h).collect() };
    let step = 2.0 * PI / h as f64;
    let turns: [i32; 5] = [0, 1, -1, 2, -2];

    let mut base = Vec::new();
    for &hs in &canonical {
        let mut seen: HashSet<(i32, i32, u16)> = HashSet::new();
        let theta0 = lattice.heading_angle(hs as i32);
        for &len in &lengths {
            let m = (len / lattice.resolution).round().max(1.0) as i32;
            for &d in &turns {
                let hf = (hs as i32 + d).rem_euclid(h as i32) as u16;
                let mid = theta0 + d as f64 * step / 2.0;
                for k in m..=(3 * m + 2) {
                    let ix = (k as f64 * mid.cos()).round() as i32;
                    let iy = (k as f64 * mid.sin()).round() as i32;
                    if ix == 0 && iy == 0 {
                        continue;
                    }
                    if seen.contains(&(ix, iy, hf)) {
                        break;
                    }
                    let target = LatticeState::new(ix, iy, hf);
                    if let Some(p) = generate_primitive(model, lattice, hs, &target) {
                        seen.insert((ix, iy, hf));
                        base.push(p);
                        break;
                    }
                }
            }
        }
        if model.kind == ModelKind::Unicycle {
            for d in [1i32, -1] {
                let hf = (hs as i32 + d).rem_euclid(h as i32) as u16;
                if let Some(p) = generate_primitive(model, lattice, hs, &LatticeState::new(0, 0, hf)) {
                    base.push(p);
                }
            }
        }
    }

    let mut all = Vec::new();
    if quarter {
        for q in 0..4u16 {
            all.extend(base.iter().map(|p| p.rotated(q, h)));
        }
    } else {
        all = base;
    }
    all.sort_by_key(|p| (p.start.ith, p.end.ith, p.end.ix, p.end.iy));
    Ok(PrimitiveSet::new(*model, *lattice, lengths, all))
}
