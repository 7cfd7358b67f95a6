//! Inflation schedule from 1.5 on the corridor against the plain epsilon 1 run.

use crate::common::{corridor_reference, plan_corridor};
use crate::Verdict;

pub fn run() -> Verdict {
    let reference = corridor_reference();
    let anytime = plan_corridor(true, 1.5);
    let eps = &anytime.outcome.episodes;
    let Some(first) = eps.iter().find(|e| e.episode_cost.is_some()) else {
        return Verdict { pass: false, detail: "no episode found a path".into() };
    };
    let base = &reference.outcome.episodes[0];
    let costs: Vec<_> = eps.iter().map(|e| e.cost).collect();
    let non_increasing = costs.windows(2).all(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => b <= a,
        (Some(_), None) => false,
        _ => true,
    });
    let last = eps.last().and_then(|e| e.episode_cost);
    let exact = last == base.cost;
    let schedule: Vec<String> = eps
        .iter()
        .map(|e| format!("eps {}: {} it, t {}", e.epsilon, e.iterations, e.episode_cost.map_or(f64::NAN, |c| c.t)))
        .collect();
    Verdict {
        pass: first.iterations < base.iterations && non_increasing && exact,
        detail: format!(
            "{}; first solution after {} iterations vs {} at eps 1; non-increasing {non_increasing}; \
             final {:?} vs eps 1 {:?}",
            schedule.join(", "),
            first.iterations,
            base.iterations,
            last,
            base.cost
        ),
    }
}
