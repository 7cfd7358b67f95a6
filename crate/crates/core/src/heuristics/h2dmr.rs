//! Obstacle-aware 2-D distance-to-goal, computed by Dijkstra over grid
//! positions that follow the map's resolution (multi-resolution variant) or a
//! fixed grid (baseline).

use crate::geometry::{Aabb, Point2};
use crate::map::{LeafId, MultiResMap};
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

type Key = (i64, i64);

#[derive(Debug, Clone, Copy)]
struct Position {
    center: Point2,
    square: Aabb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridKind {
    MultiResolution,
    Uniform,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct H2dmrStats {
    /// Positions finalized by the Dijkstra loop.
    pub iterations: usize,
    pub insertions: usize,
    /// Cost at the start position, if it was reached.
    pub start_cost: Option<f64>,
    /// Set when the start was unreachable and Euclidean distance is used instead.
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QueueItem {
    cost: f64,
    index: usize,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then(other.index.cmp(&self.index))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Distance-to-goal grid. Costs are in meters.
#[derive(Debug, Clone)]
pub struct H2dmrGrid {
    kind: GridKind,
    goal: Point2,
    f_plus: f64,
    /// Side of the smallest generated squares.
    quantum: f64,
    key_step: f64,
    costs: HashMap<Key, f64>,
    pub stats: H2dmrStats,
}

/// Smallest quadtree cell size that is not below `f_plus`.
pub fn quadtree_fidelity(map: &MultiResMap, f_plus: f64) -> f64 {
    let mut s = map.max_resolution();
    while s < f_plus * (1.0 - 1e-9) && s < map.root_extent() {
        s *= 2.0;
    }
    s
}

struct Builder<'a> {
    map: &'a MultiResMap,
    kind: GridKind,
    radius: f64,
    quantum: f64,
    key_step: f64,
    positions: Vec<Position>,
    index: HashMap<Key, usize>,
    blocked: Vec<Option<bool>>,
    leaf_positions: HashMap<LeafId, Vec<usize>>,
}

impl<'a> Builder<'a> {
    fn key(&self, p: &Point2) -> Key {
        ((p.x / self.key_step).round() as i64, (p.y / self.key_step).round() as i64)
    }

    fn intern(&mut self, center: Point2, square: Aabb) -> usize {
        let k = self.key(&center);
        if let Some(&i) = self.index.get(&k) {
            return i;
        }
        let i = self.positions.len();
        self.positions.push(Position { center, square });
        self.blocked.push(None);
        self.index.insert(k, i);
        i
    }

    fn square_at(center: Point2, side: f64) -> Aabb {
        let h = side / 2.0;
        Aabb::new(Point2::new(center.x - h, center.y - h), Point2::new(center.x + h, center.y + h))
    }

    /// A position is blocked when the inscribed disc at its center collides.
    fn is_blocked(&mut self, i: usize) -> bool {
        if let Some(b) = self.blocked[i] {
            return b;
        }
        let blocked = self.map.disc_collides(&self.positions[i].center, self.radius);
        self.blocked[i] = Some(blocked);
        blocked
    }

    fn leaf_positions(&mut self, leaf: LeafId) -> Vec<usize> {
        if let Some(v) = self.leaf_positions.get(&leaf) {
            return v.clone();
        }
        let cell = *self.map.leaf(leaf);
        let mut out = Vec::new();
        if cell.size > self.quantum * (1.0 + 1e-9) {
            for sub in self.map.subcells(&cell, cell.size / 2.0).expect("quadtree leaves split in four") {
                out.push(self.intern(sub.center, sub.bounds()));
            }
        } else {
            let adj = self.map.adjust(&cell, self.quantum).expect("leaf not larger than the quantum");
            out.push(self.intern(adj.center, adj.bounds()));
        }
        self.leaf_positions.insert(leaf, out.clone());
        out
    }

    fn uniform_position(&mut self, ix: i64, iy: i64) -> Option<usize> {
        let o = self.map.origin();
        let c = Point2::new(o.x + (ix as f64 + 0.5) * self.quantum, o.y + (iy as f64 + 0.5) * self.quantum);
        if !self.map.contains_point(&c) {
            return None;
        }
        Some(self.intern(c, Self::square_at(c, self.quantum)))
    }

    fn uniform_index(&self, p: &Point2) -> (i64, i64) {
        let o = self.map.origin();
        (((p.x - o.x) / self.quantum).floor() as i64, ((p.y - o.y) / self.quantum).floor() as i64)
    }

    /// Positions reachable in one hop from the position at `i`.
    fn neighbors(&mut self, i: usize) -> Vec<usize> {
        let Position { center, square } = self.positions[i];
        match self.kind {
            GridKind::MultiResolution => {
                let mut leaves = self.map.leaves_in_box(&square);
                if let Some(l) = self.map.leaf_at(&center) {
                    leaves.push(l);
                    leaves.extend(self.map.adjacent_ids(l));
                }
                leaves.sort_unstable();
                leaves.dedup();
                let mut out: Vec<usize> = leaves.into_iter().flat_map(|l| self.leaf_positions(l)).collect();
                out.sort_unstable();
                out.dedup();
                out.retain(|&j| j != i);
                out
            }
            GridKind::Uniform => {
                let (cx, cy) = self.uniform_index(&center);
                let mut out = Vec::with_capacity(8);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if let Some(j) = self.uniform_position(cx + dx, cy + dy) {
                            if j != i {
                                out.push(j);
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

impl H2dmrGrid {
    /// Multi-resolution grid: leaves larger than the fidelity are split into
    /// their four children, smaller ones are mapped to the fidelity-sized square
    /// containing them.
    pub fn build(start: Point2, goal: Point2, map: &MultiResMap, f_plus: f64, radius: f64) -> Self {
        let quantum = quadtree_fidelity(map, f_plus);
        Self::run(GridKind::MultiResolution, start, goal, map, f_plus, quantum, radius)
    }

    /// Fixed-resolution baseline on a uniform grid of `f_plus` squares.
    pub fn build_uniform(start: Point2, goal: Point2, map: &MultiResMap, f_plus: f64, radius: f64) -> Self {
        Self::run(GridKind::Uniform, start, goal, map, f_plus, f_plus, radius)
    }

    fn run(
        kind: GridKind,
        start: Point2,
        goal: Point2,
        map: &MultiResMap,
        f_plus: f64,
        quantum: f64,
        radius: f64,
    ) -> Self {
        let key_step = map.max_resolution().min(quantum) / 8.0;
        let mut b = Builder {
            map,
            kind,
            radius,
            quantum,
            key_step,
            positions: Vec::new(),
            index: HashMap::new(),
            blocked: Vec::new(),
            leaf_positions: HashMap::new(),
        };
        let mut stats = H2dmrStats::default();
        let mut costs: HashMap<Key, f64> = HashMap::new();
        let mut best: Vec<f64> = Vec::new();
        let mut done: Vec<bool> = Vec::new();
        let mut heap = BinaryHeap::new();

        // the goal is a degenerate square at the exact goal point
        let g = b.intern(goal, Aabb::new(goal, goal));
        b.blocked[g] = Some(false);
        let goal_ok = map.contains_point(&goal) && !map.disc_collides(&goal, radius);
        if goal_ok {
            best.resize(b.positions.len(), f64::INFINITY);
            done.resize(b.positions.len(), false);
            best[g] = 0.0;
            heap.push(QueueItem { cost: 0.0, index: g });
            stats.insertions += 1;
        }
        let mut start_cost: Option<f64> = None;
        while let Some(QueueItem { cost, index }) = heap.pop() {
            if done[index] || cost > best[index] {
                continue;
            }
            if let Some(c0) = start_cost {
                if cost > 2.0 * c0 {
                    break;
                }
            }
            done[index] = true;
            stats.iterations += 1;
            let pos = b.positions[index];
            costs.insert(b.key(&pos.center), cost);
            let sq = pos.square;
            if start_cost.is_none()
                && start.x >= sq.min.x
                && start.x <= sq.max.x
                && start.y >= sq.min.y
                && start.y <= sq.max.y
            {
                start_cost = Some(cost + pos.center.distance(&start));
            }
            for j in b.neighbors(index) {
                if j >= best.len() {
                    best.resize(b.positions.len(), f64::INFINITY);
                    done.resize(b.positions.len(), false);
                }
                if done[j] || b.is_blocked(j) {
                    continue;
                }
                let nc = cost + pos.center.distance(&b.positions[j].center);
                if nc < best[j] {
                    best[j] = nc;
                    heap.push(QueueItem { cost: nc, index: j });
                    stats.insertions += 1;
                }
            }
        }
        stats.start_cost = start_cost;
        stats.fallback = start_cost.is_none();
        Self { kind, goal, f_plus, quantum, key_step, costs, stats }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn goal(&self) -> Point2 {
        self.goal
    }

    pub fn f_plus(&self) -> f64 {
        self.f_plus
    }

    /// Side of the smallest generated square.
    pub fn quantum(&self) -> f64 {
        self.quantum
    }

    pub fn finalized(&self) -> usize {
        self.costs.len()
    }

    /// Stored cost at a position center, if finalized.
    pub fn cost_at(&self, p: &Point2) -> Option<f64> {
        self.costs.get(&((p.x / self.key_step).round() as i64, (p.y / self.key_step).round() as i64)).copied()
    }

    /// Minimum of `|x - p| + c(p)` over the finalized positions generated by the
    /// cell containing `x` and its neighbours; Euclidean distance to the goal
    /// when none is stored or the start was unreachable.
    pub fn distance(&self, x: &Point2, map: &MultiResMap) -> f64 {
        let euclid = x.distance(&self.goal);
        if self.stats.fallback || !map.contains_point(x) {
            return euclid;
        }
        let mut best = f64::INFINITY;
        let mut consider = |c: Point2| {
            if let Some(v) = self.cost_at(&c) {
                best = best.min(x.distance(&c) + v);
            }
        };
        match self.kind {
            GridKind::MultiResolution => {
                let Some(l) = map.leaf_at(x) else { return euclid };
                let mut leaves = map.adjacent_ids(l);
                leaves.push(l);
                if map.leaf_at(&self.goal).is_some_and(|g| leaves.contains(&g)) {
                    consider(self.goal);
                }
                for id in leaves {
                    let cell = *map.leaf(id);
                    if cell.size > self.quantum * (1.0 + 1e-9) {
                        if let Ok(subs) = map.subcells(&cell, cell.size / 2.0) {
                            subs.iter().for_each(|s| consider(s.center));
                        }
                    } else if let Ok(adj) = map.adjust(&cell, self.quantum) {
                        consider(adj.center);
                    }
                }
            }
            GridKind::Uniform => {
                let o = map.origin();
                let ix = ((x.x - o.x) / self.quantum).floor();
                let iy = ((x.y - o.y) / self.quantum).floor();
                let gx = ((self.goal.x - o.x) / self.quantum).floor();
                let gy = ((self.goal.y - o.y) / self.quantum).floor();
                if (gx - ix).abs() <= 1.0 && (gy - iy).abs() <= 1.0 {
                    consider(self.goal);
                }
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        consider(Point2::new(
                            o.x + (ix + dx as f64 + 0.5) * self.quantum,
                            o.y + (iy + dy as f64 + 0.5) * self.quantum,
                        ));
                    }
                }
            }
        }
        if best.is_finite() {
            best
        } else {
            euclid
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::OccupancyGrid;

    fn empty(cells: usize, res: f64, cap: Option<f64>) -> MultiResMap {
        let g = OccupancyGrid::new(cells, cells);
        match cap {
            Some(c) => MultiResMap::from_grid_capped(&g, res, Point2::new(0.0, 0.0), c).unwrap(),
            None => MultiResMap::from_grid(&g, res, Point2::new(0.0, 0.0)).unwrap(),
        }
    }

    #[test]
    fn goal_is_zero_and_free_space_is_euclidean() {
        let map = empty(128, 0.125, Some(2.0));
        let start = Point2::new(2.0, 3.0);
        let goal = Point2::new(12.0, 3.0);
        let grid = H2dmrGrid::build(start, goal, &map, 0.5, 0.2);
        assert!(!grid.stats.fallback);
        assert_eq!(grid.distance(&goal, &map), 0.0);
        let c0 = grid.stats.start_cost.unwrap();
        assert!((c0 - 10.0).abs() <= 0.5 * 2f64.sqrt() + 1e-9, "{c0}");
        let d = grid.distance(&start, &map);
        assert!(d >= 10.0 - 1e-9 && d <= 10.0 + 2.0 * 2f64.sqrt(), "{d}");
    }

    #[test]
    fn enclosed_goal_falls_back() {
        let mut g = OccupancyGrid::new(64, 64);
        for i in 20..=30 {
            g.set(i, 20, true);
            g.set(i, 30, true);
            g.set(20, i, true);
            g.set(30, i, true);
        }
        let map = MultiResMap::from_grid(&g, 0.25, Point2::new(0.0, 0.0)).unwrap();
        let goal = Point2::new(6.3, 6.3);
        let start = Point2::new(2.0, 2.0);
        let grid = H2dmrGrid::build(start, goal, &map, 0.5, 0.2);
        assert!(grid.stats.fallback);
        assert_eq!(grid.distance(&start, &map), start.distance(&goal));
    }

    #[test]
    fn wall_forces_detour() {
        // 16 m map with a wall at x in [7, 8], y < 12
        let mut g = OccupancyGrid::new(128, 128);
        for y in 0..96 {
            for x in 56..64 {
                g.set(x, y, true);
            }
        }
        let map = MultiResMap::from_grid(&g, 0.125, Point2::new(0.0, 0.0)).unwrap();
        let start = Point2::new(4.0, 4.0);
        let goal = Point2::new(12.0, 4.0);
        let grid = H2dmrGrid::build(start, goal, &map, 0.5, 0.3);
        let d = grid.distance(&start, &map);
        // shortest detour around the wall tip at (7..8, 12)
        let around = start.distance(&Point2::new(7.0, 12.0)) + 1.0 + Point2::new(8.0, 12.0).distance(&goal);
        assert!(d > 12.0, "{d}");
        assert!(d < around * 1.1 + 2.0, "{d} vs {around}");
    }

    #[test]
    fn uniform_matches_multires_on_empty_map() {
        let map = empty(128, 0.125, Some(4.0));
        let start = Point2::new(1.3, 2.1);
        let goal = Point2::new(14.2, 13.7);
        let mr = H2dmrGrid::build(start, goal, &map, 0.5, 0.2);
        let sr = H2dmrGrid::build_uniform(start, goal, &map, 0.5, 0.2);
        assert!(mr.stats.iterations < sr.stats.iterations);
        for p in [start, Point2::new(5.0, 5.0), Point2::new(10.0, 3.0)] {
            let a = mr.distance(&p, &map);
            let b = sr.distance(&p, &map);
            let e = p.distance(&goal);
            assert!(a >= e - 1e-9 && b >= e - 1e-9);
            assert!((b - e) <= 0.09 * e + 0.5 * 2f64.sqrt(), "{b} {e}");
        }
    }
}
