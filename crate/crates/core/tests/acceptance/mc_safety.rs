//! Seeded closed-loop executions of the corridor plan.

use crate::common::{corridor, corridor_reference};
use crate::Verdict;
use safelat_core::sim::batch;
use safelat_core::ExecutionPlan;

const RUNS: usize = 1000;
const LIMIT: f64 = 0.01;

pub fn run() -> Verdict {
    let sc = corridor();
    let Some(plan) = &corridor_reference().outcome.best else {
        return Verdict { pass: false, detail: "no corridor plan".into() };
    };
    if plan.cost.c != 0.0 {
        return Verdict { pass: false, detail: format!("plan has collision cost {}", plan.cost.c) };
    }
    let model = &sc.primitives.model;
    let exec = ExecutionPlan::from_plan(plan, model, &sc.noise).expect("execution plan builds");
    let s = batch(&exec, model, &sc.footprint, &sc.map, RUNS, 0, |_| {});
    let rate = s.collision_rate.unwrap_or(1.0);
    Verdict {
        pass: rate <= LIMIT,
        detail: format!(
            "{} collisions in {RUNS} runs ({:.1}%, limit {:.0}%), {} steps per run, mean max deviation {:.3} m",
            s.collisions,
            rate * 100.0,
            LIMIT * 100.0,
            exec.steps(),
            s.mean_max_deviation.unwrap_or(f64::NAN)
        ),
    }
}
