//! Heuristic lower bounds on random small maps, checked at every state that
//! can reach the goal against exhaustive search.

use crate::common::{dijkstra, small_instance};
use crate::Verdict;

const MAPS: u64 = 50;

pub fn run() -> Verdict {
    let mut checked = 0;
    let mut violations = Vec::new();
    let mut tightest: f64 = 0.0;
    for seed in 0..MAPS {
        let inst = small_instance(seed);
        let planner = inst.planner();
        let reversed: Vec<_> = inst.edges(&planner).into_iter().map(|(a, b, c)| (b, a, c)).collect();
        let to_goal = dijkstra(&reversed, inst.goal);
        for (s, cost) in &to_goal {
            let h = planner.heuristic().value(s, &inst.map);
            checked += 1;
            if cost.t > 0.0 {
                tightest = tightest.max(h / cost.t);
            }
            if h > cost.t + 1e-9 {
                violations.push(format!("map {seed} state {s:?}: h {h} > {}", cost.t));
            }
        }
    }
    Verdict {
        pass: violations.is_empty() && checked > 0,
        detail: format!(
            "{checked} states over {MAPS} maps, {} violations, largest h/optimal {tightest:.3}{}",
            violations.len(),
            violations.first().map_or(String::new(), |v| format!("; first: {v}"))
        ),
    }
}
