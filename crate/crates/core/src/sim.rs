//! Monte Carlo execution of planned paths under the closed-loop LQG controller.

use crate::belief::{propagate, psd_sqrt, NoiseModel};
use crate::error::Result;
use crate::footprint::Footprint;
use crate::geometry::Pose2;
use crate::map::MultiResMap;
use crate::model::{Control, Cov3, RobotModel, State3};
use crate::planner::PlanResult;
use crate::rng::SplitMix64;
use nalgebra::{Matrix2x3, Matrix3};
use serde::{Deserialize, Serialize};

/// Nominal trajectory and controller gains, precomputed once per batch.
#[derive(Debug, Clone)]
pub struct ExecutionPlan {
    pub nominal: Vec<State3>,
    pub controls: Vec<Control>,
    pub kalman_gains: Vec<Matrix3<f64>>,
    pub feedback_gains: Vec<Matrix2x3<f64>>,
    sigma0_root: Cov3,
    process_root: Cov3,
    measurement_root: Cov3,
}

impl ExecutionPlan {
    /// Gains are those of the belief propagation, edge by edge.
    pub fn from_plan(plan: &PlanResult, model: &RobotModel, noise: &NoiseModel) -> Result<Self> {
        let mut nominal = vec![State3::new(
            plan.start_belief.mean[0],
            plan.start_belief.mean[1],
            plan.start_belief.mean[2],
        )];
        let mut controls = Vec::new();
        let mut kalman_gains = Vec::new();
        let mut feedback_gains = Vec::new();
        for e in &plan.path {
            let cs: Vec<Control> = e.controls.iter().map(|c| Control::new(c[0], c[1])).collect();
            let t = propagate(&e.beliefs[0], &e.poses, &cs, model, noise)?;
            nominal.extend(e.poses[1..].iter().map(|p| State3::new(p.x, p.y, p.theta)));
            controls.extend(cs);
            kalman_gains.extend(t.kalman_gains);
            feedback_gains.extend(t.feedback_gains);
        }
        Self::from_parts(nominal, controls, kalman_gains, feedback_gains, &plan.start_belief.sigma(), noise)
    }

    /// Single primitive or arbitrary nominal trajectory.
    pub fn from_parts(
        nominal: Vec<State3>,
        controls: Vec<Control>,
        kalman_gains: Vec<Matrix3<f64>>,
        feedback_gains: Vec<Matrix2x3<f64>>,
        sigma0: &Cov3,
        noise: &NoiseModel,
    ) -> Result<Self> {
        Ok(Self {
            nominal,
            controls,
            kalman_gains,
            feedback_gains,
            sigma0_root: psd_sqrt(sigma0)?,
            process_root: psd_sqrt(&noise.process)?,
            measurement_root: psd_sqrt(&noise.measurement)?,
        })
    }

    pub fn steps(&self) -> usize {
        self.controls.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub seed: u64,
    /// True states, one per executed step boundary.
    pub poses: Vec<[f64; 3]>,
    pub estimates: Vec<[f64; 3]>,
    pub collided: bool,
    pub first_collision: Option<usize>,
}

impl ExecutionTrace {
    /// Largest positional distance from the nominal trajectory.
    pub fn max_deviation(&self, plan: &ExecutionPlan) -> f64 {
        self.poses
            .iter()
            .zip(&plan.nominal)
            .map(|(p, n)| (p[0] - n[0]).hypot(p[1] - n[1]))
            .fold(0.0, f64::max)
    }
}

fn gaussian(rng: &mut SplitMix64, root: &Cov3) -> State3 {
    let n = State3::new(rng.normal(), rng.normal(), rng.normal());
    root * n
}

fn to_arr(x: &State3) -> [f64; 3] {
    [x[0], x[1], x[2]]
}

/// Executes one run. Noise is drawn in a fixed order per step (process, then
/// measurement) whether or not a measurement is used, so runs with different
/// sensing regions share their process noise. With `map` and `fp` set, the run
/// stops at the first pose in collision.
pub fn simulate(
    plan: &ExecutionPlan,
    model: &RobotModel,
    collision: Option<(&Footprint, &MultiResMap)>,
    seed: u64,
) -> ExecutionTrace {
    let mut rng = SplitMix64::new(seed);
    let mut x = plan.nominal[0] + gaussian(&mut rng, &plan.sigma0_root);
    let mut xh = plan.nominal[0];
    let mut trace = ExecutionTrace {
        seed,
        poses: vec![to_arr(&x)],
        estimates: vec![to_arr(&xh)],
        collided: false,
        first_collision: None,
    };
    let hit = |x: &State3| collision.is_some_and(|(fp, map)| fp.collides(&Pose2::new(x[0], x[1], x[2]), map));
    if hit(&x) {
        trace.collided = true;
        trace.first_collision = Some(0);
        return trace;
    }
    for k in 0..plan.steps() {
        let u = plan.controls[k] + plan.feedback_gains[k] * (xh - plan.nominal[k]);
        x = model.step(&x, &u) + gaussian(&mut rng, &plan.process_root);
        let v = gaussian(&mut rng, &plan.measurement_root);
        let pred = model.step(&xh, &u);
        let gain = &plan.kalman_gains[k];
        xh = if gain.iter().all(|g| *g == 0.0) { pred } else { pred + gain * (x + v - pred) };
        trace.poses.push(to_arr(&x));
        trace.estimates.push(to_arr(&xh));
        if hit(&x) {
            trace.collided = true;
            trace.first_collision = Some(k + 1);
            break;
        }
    }
    trace
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub runs: usize,
    pub collisions: usize,
    /// `None` when no run was made.
    pub collision_rate: Option<f64>,
    /// Mean over runs of the largest positional deviation from the plan.
    pub mean_max_deviation: Option<f64>,
    pub seeds: Vec<u64>,
}

/// Kahan-compensated sum.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in xs {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Runs `runs` simulations with seeds `base_seed + i`. Traces are passed to
/// `on_trace` in seed order.
pub fn batch<F: FnMut(&ExecutionTrace)>(
    plan: &ExecutionPlan,
    model: &RobotModel,
    fp: &Footprint,
    map: &MultiResMap,
    runs: usize,
    base_seed: u64,
    mut on_trace: F,
) -> BatchSummary {
    let seeds: Vec<u64> = (0..runs as u64).map(|i| base_seed.wrapping_add(i)).collect();
    let mut collisions = 0;
    let mut deviations = Vec::with_capacity(runs);
    for &s in &seeds {
        let t = simulate(plan, model, Some((fp, map)), s);
        collisions += usize::from(t.collided);
        deviations.push(t.max_deviation(plan));
        on_trace(&t);
    }
    let (collision_rate, mean_max_deviation) = if runs == 0 {
        (None, None)
    } else {
        (Some(collisions as f64 / runs as f64), Some(compensated_sum(deviations.into_iter()) / runs as f64))
    };
    BatchSummary { runs, collisions, collision_rate, mean_max_deviation, seeds }
}
