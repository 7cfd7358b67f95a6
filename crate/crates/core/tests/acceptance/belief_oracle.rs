//! Predicted covariance along single primitives against a closed-loop Monte
//! Carlo run of the same controller and filter.

use crate::Verdict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use safelat_core::belief::propagate;
use safelat_core::model::Control;
use safelat_core::{Belief, Cov3, NoiseModel, Pose2, RobotModel, State3};
use std::f64::consts::FRAC_PI_2;

const RUNS: usize = 100_000;
const NOISE: f64 = 0.01;
const LIMIT: f64 = 0.05;

fn nominal(model: &RobotModel, controls: &[Control]) -> Vec<State3> {
    let mut xs = vec![State3::new(1.0, 1.0, 0.0)];
    for u in controls {
        xs.push(model.step(xs.last().unwrap(), u));
    }
    xs
}

/// Worst per-step relative Frobenius error and the step where it occurs.
fn check(model: &RobotModel, controls: &[Control], seed: u64) -> (f64, usize) {
    let xs = nominal(model, controls);
    let poses: Vec<Pose2> = xs.iter().map(|x| Pose2::new(x[0], x[1], x[2])).collect();
    let sigma0 = Cov3::identity() * NOISE;
    let noise = NoiseModel::isotropic(NOISE, NOISE);
    let t = propagate(&Belief::from_pose(&poses[0], sigma0), &poses, controls, model, &noise).unwrap();

    let sd = NOISE.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || State3::from_fn(|_, _| sd * Distribution::<f64>::sample(&StandardNormal, &mut rng));
    let n = controls.len() + 1;
    let mut sum = vec![State3::zeros(); n];
    let mut outer = vec![Cov3::zeros(); n];
    for _ in 0..RUNS {
        let mut x = xs[0] + gauss();
        let mut est = xs[0];
        for k in 0..n {
            let e = x - xs[k];
            sum[k] += e;
            outer[k] += e * e.transpose();
            if k + 1 == n {
                break;
            }
            let u = controls[k] + t.feedback_gains[k] * (est - xs[k]);
            x = model.step(&x, &u) + gauss();
            let z = x + gauss();
            let pred = model.step(&est, &u);
            est = pred + t.kalman_gains[k] * (z - pred);
        }
    }
    let mut worst = (0.0, 0);
    for k in 1..n {
        let mean = sum[k] / RUNS as f64;
        let cov = (outer[k] - mean * mean.transpose() * RUNS as f64) / (RUNS - 1) as f64;
        let predicted = t.beliefs[k].sigma();
        let rel = (cov - predicted).norm() / predicted.norm();
        if rel > worst.0 {
            worst = (rel, k);
        }
    }
    worst
}

pub fn run() -> Verdict {
    let model = RobotModel::unicycle(1.0, 1.0, 0.125);
    let straight = vec![Control::new(1.0, 0.0); 16];
    // a quarter turn in 13 steps stays under the rate limit
    let steps = 13;
    let turn = vec![Control::new(1.0, FRAC_PI_2 / (steps as f64 * model.dt)); steps];
    let (es, ks) = check(&model, &straight, 7);
    let (et, kt) = check(&model, &turn, 8);
    Verdict {
        pass: es <= LIMIT && et <= LIMIT,
        detail: format!(
            "{RUNS} runs each; worst relative Frobenius error straight {:.2}% (step {ks}), 90-degree turn {:.2}% (step {kt}), limit {:.0}%",
            es * 100.0,
            et * 100.0,
            LIMIT * 100.0
        ),
    }
}
