//! Time-to-goal heuristics: the obstacle-aware multi-resolution grid, the
//! free-space lookup table and their pointwise maximum.

pub mod fsh;
pub mod h2dmr;

pub use fsh::FshTable;
pub use h2dmr::{quadtree_fidelity, GridKind, H2dmrGrid, H2dmrStats};

use crate::map::MultiResMap;
use crate::model::{LatticeSpec, LatticeState};
use std::f64::consts::PI;

/// Which components enter the combined heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeuristicFlags {
    pub h2dmr: bool,
    pub fsh: bool,
}

impl Default for HeuristicFlags {
    fn default() -> Self {
        Self { h2dmr: true, fsh: true }
    }
}

#[derive(Debug, Clone)]
pub struct Heuristic {
    pub lattice: LatticeSpec,
    pub goal: LatticeState,
    pub goal_heading_any: bool,
    pub v_max: f64,
    pub grid: Option<H2dmrGrid>,
    pub fsh: Option<FshTable>,
}

impl Heuristic {
    /// Grid distance converted to time. Grid paths run through square centers,
    /// so they can be longer than the true shortest path: by up to a factor
    /// `1 / cos(pi / 8)` along the way, and by about a square diagonal at the
    /// query end. Both are removed to keep the estimate a lower bound.
    pub fn h2dmr_value(&self, x: &LatticeState, map: &MultiResMap) -> f64 {
        let Some(grid) = &self.grid else { return 0.0 };
        let p = self.lattice.pose(x).position();
        let d = grid.distance(&p, map);
        let cell = map.leaf_at(&p).map_or(grid.quantum(), |l| map.leaf(l).size);
        let slack = 2f64.sqrt() * cell.max(grid.quantum());
        ((PI / 8.0).cos() * d - slack).max(0.0) / self.v_max
    }

    pub fn fsh_value(&self, x: &LatticeState) -> f64 {
        self.fsh.as_ref().map_or(0.0, |t| t.value(x, &self.goal, self.goal_heading_any))
    }

    pub fn euclidean_value(&self, x: &LatticeState) -> f64 {
        let a = self.lattice.pose(x).position();
        let b = self.lattice.pose(&self.goal).position();
        a.distance(&b) / self.v_max
    }

    /// Pointwise maximum of the enabled components; Euclidean time when both
    /// are disabled.
    pub fn value(&self, x: &LatticeState, map: &MultiResMap) -> f64 {
        if self.grid.is_none() && self.fsh.is_none() {
            return self.euclidean_value(x);
        }
        self.h2dmr_value(x, map).max(self.fsh_value(x))
    }
}
