//! The epsilon 1 search against exhaustive Dijkstra on the same edge costs.

use crate::common::{dijkstra, small_instance};
use crate::Verdict;

const INSTANCES: u64 = 20;
const SEED_BASE: u64 = 1000;

pub fn run() -> Verdict {
    let mut solved = 0;
    let mut mismatches = Vec::new();
    for seed in SEED_BASE..SEED_BASE + INSTANCES {
        let inst = small_instance(seed);
        let mut planner = inst.planner();
        let oracle = dijkstra(&inst.edges(&planner), inst.start).get(&inst.goal).copied();
        let found = planner.run(|_, _| {}).expect("planner runs").best.map(|b| b.cost);
        solved += usize::from(found.is_some());
        if found != oracle {
            mismatches.push(format!("instance {seed}: planner {found:?}, exhaustive {oracle:?}"));
        }
    }
    Verdict {
        pass: mismatches.is_empty(),
        detail: format!(
            "{INSTANCES} instances, {solved} with a path, {} mismatches{}",
            mismatches.len(),
            mismatches.first().map_or(String::new(), |m| format!("; first: {m}"))
        ),
    }
}
