//! H2DMR against the fixed-resolution H2D grid on an empty 50 x 50 m map whose
//! quadtree leaves are capped at C+.

use crate::Verdict;
use safelat_core::heuristics::H2dmrGrid;
use safelat_core::{MultiResMap, OccupancyGrid, Point2};

const F_PLUS: f64 = 0.5;
const CAPS: [f64; 5] = [0.8, 1.6, 3.2, 6.4, 12.8];

pub fn run() -> Verdict {
    let grid = OccupancyGrid::new(500, 500);
    let (start, goal) = (Point2::new(2.0, 2.0), Point2::new(48.0, 48.0));
    let radius = 0.3;
    let mut mr = Vec::new();
    let mut sr = Vec::new();
    for cap in CAPS {
        let map = MultiResMap::from_grid_capped(&grid, 0.1, Point2::new(0.0, 0.0), cap).unwrap();
        mr.push(H2dmrGrid::build(start, goal, &map, F_PLUS, radius).stats.iterations);
        sr.push(H2dmrGrid::build_uniform(start, goal, &map, F_PLUS, radius).stats.iterations);
    }
    let constant = sr.windows(2).all(|w| w[0] == w[1]);
    let monotone = mr.windows(2).all(|w| w[1] <= w[0]);
    let last = *mr.last().unwrap() as f64 / *sr.last().unwrap() as f64;
    let gains: Vec<String> = mr
        .iter()
        .zip(&sr)
        .zip(CAPS)
        .map(|((m, s), c)| format!("{c}:{m}/{s}"))
        .collect();
    Verdict {
        pass: constant && monotone && last <= 0.15,
        detail: format!(
            "C+:MR/SR iterations {}; SR constant {constant}, MR non-increasing {monotone}, MR/SR at 12.8 = {:.1}% (limit 15%)",
            gains.join(" "),
            last * 100.0
        ),
    }
}
