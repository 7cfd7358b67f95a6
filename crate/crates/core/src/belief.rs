//! LQG belief propagation along nominal trajectories.
//!
//! A belief tracks the estimation error covariance `P` of a Kalman filter and
//! the covariance `Lambda` of the estimate around the nominal trajectory under
//! LQR feedback. The predicted state covariance is `Sigma = P + Lambda`.

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point2, Pose2};
use crate::model::{Control, Cov3, RobotModel, State3};
use nalgebra::{Matrix2, Matrix2x3, Matrix3, Matrix3x2};
use serde::{Deserialize, Serialize};

const PSD_FLOOR: f64 = -1e-9;

/// Process and measurement noise, with regions where no measurement arrives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Process noise covariance `M`.
    pub process: Cov3,
    /// Measurement noise covariance `N` (full-state measurement).
    pub measurement: Cov3,
    /// Regions where measurements are unavailable.
    #[serde(default)]
    pub denied: Vec<Aabb>,
    /// When set, no measurement is ever received.
    #[serde(default)]
    pub denied_everywhere: bool,
}

impl NoiseModel {
    pub fn isotropic(process: f64, measurement: f64) -> Self {
        Self {
            process: Cov3::identity() * process,
            measurement: Cov3::identity() * measurement,
            denied: Vec::new(),
            denied_everywhere: false,
        }
    }

    /// Open-loop noise: process noise only, never a measurement.
    pub fn open_loop(process: Cov3) -> Self {
        Self { process, measurement: Cov3::zeros(), denied: Vec::new(), denied_everywhere: true }
    }

    pub fn measurement_available(&self, p: &Point2) -> bool {
        !self.denied_everywhere && !self.denied.iter().any(|b| b.distance_to(p) == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub mean: State3,
    /// Estimation error covariance.
    pub p: Cov3,
    /// Covariance of the estimate around the nominal state.
    pub lambda: Cov3,
}

impl Belief {
    /// Initial belief: the estimator starts at the mean with error `sigma0`.
    pub fn new(mean: State3, sigma0: Cov3) -> Self {
        Self { mean, p: sigma0, lambda: Cov3::zeros() }
    }

    pub fn from_pose(pose: &Pose2, sigma0: Cov3) -> Self {
        Self::new(State3::new(pose.x, pose.y, pose.theta), sigma0)
    }

    /// Predicted state covariance `P + Lambda`.
    pub fn sigma(&self) -> Cov3 {
        self.p + self.lambda
    }

    pub fn uncertainty_trace(&self) -> f64 {
        self.sigma().trace()
    }

    /// Same covariances at another mean.
    pub fn moved_to(&self, pose: &Pose2) -> Self {
        Self { mean: State3::new(pose.x, pose.y, pose.theta), ..*self }
    }
}

/// Beliefs at every pose of a trajectory plus the gains that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTrajectory {
    /// One belief per pose, `beliefs[0]` being the initial one.
    pub beliefs: Vec<Belief>,
    /// Kalman gain applied at the end of step `k`.
    pub kalman_gains: Vec<Matrix3<f64>>,
    /// LQR feedback gain applied during step `k`.
    pub feedback_gains: Vec<Matrix2x3<f64>>,
}

impl BeliefTrajectory {
    pub fn last(&self) -> &Belief {
        self.beliefs.last().expect("trajectory is never empty")
    }
}

fn symmetrize(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

/// Principal-minor screen; the eigenvalues are only computed to report a failure.
fn check_psd(m: &Matrix3<f64>) -> Result<()> {
    let s = m.norm().max(1.0);
    let tol = PSD_FLOOR * s;
    let minor = |i: usize, j: usize| m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
    let ok = (0..3).all(|i| m[(i, i)] >= tol)
        && minor(0, 1) >= tol * s
        && minor(0, 2) >= tol * s
        && minor(1, 2) >= tol * s
        && m.determinant() >= tol * s * s;
    if ok {
        return Ok(());
    }
    let min = m.symmetric_eigenvalues().min();
    if min < tol {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

/// Symmetric square root of a PSD matrix, eigenvalues clamped at zero.
pub fn psd_sqrt(m: &Cov3) -> Result<Cov3> {
    let eig = symmetrize(m).symmetric_eigen();
    let scale = eig.eigenvalues.abs().max().max(1.0);
    let mut root = Cov3::zeros();
    for i in 0..3 {
        let ev = eig.eigenvalues[i];
        if ev < PSD_FLOOR * scale {
            return Err(Error::NotPsd(ev));
        }
        let v = eig.eigenvectors.column(i);
        root += v * v.transpose() * ev.max(0.0).sqrt();
    }
    Ok(root)
}

/// Finite-horizon discrete LQR with `Q = I`, `R = I` and terminal weight `Q`.
pub fn lqr_gains(a: &[Matrix3<f64>], b: &[Matrix3x2<f64>]) -> Result<Vec<Matrix2x3<f64>>> {
    let q = Matrix3::<f64>::identity();
    let r = Matrix2::<f64>::identity();
    let mut s = q;
    let mut gains = vec![Matrix2x3::zeros(); a.len()];
    for k in (0..a.len()).rev() {
        let bt_s = b[k].transpose() * s;
        let inv = (r + bt_s * b[k]).try_inverse().ok_or(Error::SingularInnovation)?;
        let l = -inv * bt_s * a[k];
        s = symmetrize(&(q + a[k].transpose() * s * (a[k] + b[k] * l)));
        gains[k] = l;
    }
    Ok(gains)
}

/// Propagates `initial` along the nominal poses and controls.
///
/// `poses` has one more entry than `controls`; the belief means follow the
/// nominal poses. Measurements are taken at the pose reached by each step
/// unless it lies in a denied region.
pub fn propagate(
    initial: &Belief,
    poses: &[Pose2],
    controls: &[Control],
    model: &RobotModel,
    noise: &NoiseModel,
) -> Result<BeliefTrajectory> {
    if poses.len() != controls.len() + 1 {
        return Err(Error::Misaligned { beliefs: controls.len() + 1, poses: poses.len() });
    }
    check_psd(&initial.p)?;
    check_psd(&initial.lambda)?;
    let n = controls.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for k in 0..n {
        let x = State3::new(poses[k].x, poses[k].y, poses[k].theta);
        let (ak, bk) = model.linearize(&x, &controls[k]);
        a.push(ak);
        b.push(bk);
    }
    let feedback = lqr_gains(&a, &b)?;

    let mut beliefs = Vec::with_capacity(n + 1);
    let mut kalman = Vec::with_capacity(n);
    let mut cur = initial.moved_to(&poses[0]);
    beliefs.push(cur);
    for k in 0..n {
        let p_pred = symmetrize(&(a[k] * cur.p * a[k].transpose() + noise.process));
        let gain = if noise.measurement_available(&poses[k + 1].position()) {
            let s = p_pred + noise.measurement;
            let inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
            p_pred * inv
        } else {
            Matrix3::zeros()
        };
        let p_new = symmetrize(&(p_pred - gain * p_pred));
        let closed = a[k] + b[k] * feedback[k];
        let lambda_new = symmetrize(&(closed * cur.lambda * closed.transpose() + gain * p_pred));
        check_psd(&p_new)?;
        check_psd(&lambda_new)?;
        cur = Belief {
            mean: State3::new(poses[k + 1].x, poses[k + 1].y, poses[k + 1].theta),
            p: p_new,
            lambda: lambda_new,
        };
        beliefs.push(cur);
        kalman.push(gain);
    }
    Ok(BeliefTrajectory { beliefs, kalman_gains: kalman, feedback_gains: feedback })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(n: usize, v: f64, dt: f64) -> (Vec<Pose2>, Vec<Control>) {
        let poses = (0..=n).map(|k| Pose2::new(k as f64 * v * dt, 0.0, 0.0)).collect();
        (poses, vec![Control::new(v, 0.0); n])
    }

    #[test]
    fn zero_noise_keeps_zero_covariance() {
        let m = RobotModel::unicycle(1.0, 1.0, 0.1);
        let (poses, controls) = straight(10, 1.0, 0.1);
        let noise = NoiseModel::isotropic(0.0, 0.01);
        let t = propagate(&Belief::new(State3::zeros(), Cov3::zeros()), &poses, &controls, &m, &noise).unwrap();
        assert_eq!(t.beliefs.len(), 11);
        for b in &t.beliefs {
            assert!(b.uncertainty_trace().abs() < 1e-15);
        }
    }

    #[test]
    fn open_loop_grows_by_process_noise() {
        let m = RobotModel::unicycle(1.0, 1.0, 0.1);
        // in-place: A = I, so P grows by exactly M per step
        let poses = vec![Pose2::new(0.0, 0.0, 0.0); 6];
        let controls = vec![Control::new(0.0, 0.0); 5];
        let noise = NoiseModel::open_loop(Cov3::identity() * 0.02);
        let t = propagate(&Belief::new(State3::zeros(), Cov3::zeros()), &poses, &controls, &m, &noise).unwrap();
        assert!((t.last().p - Cov3::identity() * 0.1).norm() < 1e-12);
        assert_eq!(t.last().lambda, Cov3::zeros());
    }

    #[test]
    fn measurements_bound_the_covariance() {
        let m = RobotModel::unicycle(1.0, 1.0, 0.1);
        let (poses, controls) = straight(400, 1.0, 0.1);
        let noise = NoiseModel::isotropic(0.01, 0.01);
        let t = propagate(&Belief::new(State3::zeros(), Cov3::identity() * 0.1), &poses, &controls, &m, &noise).unwrap();
        let tr: Vec<f64> = t.beliefs.iter().map(|b| b.uncertainty_trace()).collect();
        // converges instead of growing like the open-loop case; the feedback
        // weakens near the end of the finite horizon
        assert!((tr[200] - tr[100]).abs() < 1e-6, "{} {}", tr[100], tr[200]);
        assert!(tr[400] < 2.0 * tr[200]);
        // standing still gives A = I and a decoupled scalar Riccati equation
        // p^2 + m p - m n = 0 per axis
        let still = vec![Pose2::new(0.0, 0.0, 0.0); 401];
        let zero = vec![Control::new(0.0, 0.0); 400];
        let t = propagate(&Belief::new(State3::zeros(), Cov3::identity() * 0.1), &still, &zero, &m, &noise).unwrap();
        let p_inf = (-0.01 + (0.0001f64 + 4.0 * 0.0001).sqrt()) / 2.0;
        assert!((t.last().p - Cov3::identity() * p_inf).norm() < 1e-9);
    }

    #[test]
    fn denied_region_switches_off_gain() {
        let m = RobotModel::unicycle(1.0, 1.0, 0.1);
        let (poses, controls) = straight(20, 1.0, 0.1);
        let mut noise = NoiseModel::isotropic(0.01, 0.01);
        noise.denied.push(Aabb::new(Point2::new(0.95, -1.0), Point2::new(5.0, 1.0)));
        let t = propagate(&Belief::new(State3::zeros(), Cov3::identity() * 0.1), &poses, &controls, &m, &noise).unwrap();
        for k in 0..20 {
            let inside = poses[k + 1].x >= 0.95;
            assert_eq!(t.kalman_gains[k] == Matrix3::zeros(), inside, "step {k}");
        }
        assert!(t.beliefs[20].p.trace() > t.beliefs[9].p.trace());
    }

    #[test]
    fn covariances_stay_symmetric_psd() {
        let m = RobotModel::unicycle(1.0, 1.0, 0.1);
        let mut poses = vec![Pose2::new(0.0, 0.0, 0.0)];
        let mut controls = Vec::new();
        let mut x = State3::zeros();
        for k in 0..200 {
            let u = Control::new(0.8, ((k as f64) * 0.1).sin());
            x = m.step(&x, &u);
            poses.push(Pose2::new(x[0], x[1], x[2]));
            controls.push(u);
        }
        let noise = NoiseModel::isotropic(0.003, 0.05);
        let t = propagate(&Belief::new(State3::zeros(), Cov3::identity() * 0.2), &poses, &controls, &m, &noise).unwrap();
        for b in &t.beliefs {
            for c in [b.p, b.lambda] {
                assert_eq!(c, c.transpose());
                assert!(c.symmetric_eigenvalues().min() > -1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = RobotModel::unicycle(1.0, 1.0, 0.1);
        let (poses, controls) = straight(3, 1.0, 0.1);
        let noise = NoiseModel::isotropic(0.01, 0.01);
        let b = Belief::new(State3::zeros(), Cov3::zeros());
        assert!(matches!(propagate(&b, &poses[..3], &controls, &m, &noise), Err(Error::Misaligned { .. })));
        let bad = Belief::new(State3::zeros(), -Cov3::identity());
        assert!(matches!(propagate(&bad, &poses, &controls, &m, &noise), Err(Error::NotPsd(_))));
    }
}
