//! Corridor planning with and without graduated fidelity at epsilon 1.

use crate::common::{corridor_reference, plan_corridor};
use crate::Verdict;

const BUDGET_SECS: f64 = 120.0;

pub fn run() -> Verdict {
    let on = corridor_reference();
    let off = plan_corridor(false, 1.0);
    let (Some(bon), Some(boff)) = (&on.outcome.best, &off.outcome.best) else {
        return Verdict { pass: false, detail: "no path found".into() };
    };
    let (son, soff) = (&on.outcome.episodes[0], &off.outcome.episodes[0]);
    let cut = |a: usize, b: usize| 1.0 - a as f64 / b as f64;
    let insertions = cut(son.insertions, soff.insertions);
    let iterations = cut(son.iterations, soff.iterations);
    let increase = bon.cost.t / boff.cost.t - 1.0;
    let (ton, toff) = (on.elapsed.as_secs_f64(), off.elapsed.as_secs_f64());
    Verdict {
        pass: insertions >= 0.5
            && iterations >= 0.5
            && increase <= 0.15
            && ton <= BUDGET_SECS
            && toff <= BUDGET_SECS,
        detail: format!(
            "insertions {} vs {} (-{:.1}%), iterations {} vs {} (-{:.1}%), time cost {} vs {} ({:+.1}%), \
             c {} vs {}, runtime {ton:.1} s / {toff:.1} s",
            son.insertions,
            soff.insertions,
            insertions * 100.0,
            son.iterations,
            soff.iterations,
            iterations * 100.0,
            bon.cost.t,
            boff.cost.t,
            increase * 100.0,
            bon.cost.c,
            boff.cost.c,
        ),
    }
}
