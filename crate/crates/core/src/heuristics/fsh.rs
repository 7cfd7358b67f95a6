//! Free-space heuristic: exact lattice cost-to-go ignoring obstacles, stored as
//! a lookup table around the goal.

use crate::error::{Error, Result};
use crate::model::LatticeState;
use crate::primitives::PrimitiveSet;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::{Path, PathBuf};

pub const FSH_FILE_VERSION: u32 = 1;
pub const DEFAULT_RADIUS: i32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Item {
    cost: f64,
    index: usize,
}

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then(other.index.cmp(&self.index))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cost-to-go from states within `radius` lattice steps (Chebyshev) of a goal
/// at the origin. Tables exist for the canonical goal headings and for an
/// unconstrained goal heading; the rest follow by quarter-turn symmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FshTable {
    pub version: u32,
    /// Content hash of the primitive set the table was built from.
    pub primitive_hash: String,
    pub radius: i32,
    pub headings: u16,
    pub resolution: f64,
    pub v_max: f64,
    /// One table per canonical goal heading, then the any-heading table.
    /// Values are seconds; negative means unreachable within the search box.
    tables: Vec<Vec<f64>>,
}

impl FshTable {
    fn side(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    fn canonical_count(headings: u16) -> u16 {
        if headings.is_multiple_of(4) {
            headings / 4
        } else {
            headings
        }
    }

    /// Builds all tables by backward Dijkstra over the free lattice, searching a
    /// box of twice the stored radius.
    pub fn build(set: &PrimitiveSet, radius: i32) -> Self {
        let h = set.lattice.headings;
        let canon = Self::canonical_count(h);
        let mut tables = Vec::new();
        for hg in 0..canon {
            tables.push(backward_search(set, radius, &[hg]));
        }
        let all: Vec<u16> = (0..h).collect();
        tables.push(backward_search(set, radius, &all));
        Self {
            version: FSH_FILE_VERSION,
            primitive_hash: set.content_hash(),
            radius,
            headings: h,
            resolution: set.lattice.resolution,
            v_max: set.model.v_max,
            tables,
        }
    }

    /// Loads the table from `dir` if a cache for this primitive set exists,
    /// otherwise builds it and writes the cache.
    pub fn load_or_build(set: &PrimitiveSet, radius: i32, dir: Option<&Path>) -> Result<Self> {
        let Some(dir) = dir else {
            return Ok(Self::build(set, radius));
        };
        let hash = set.content_hash();
        let path = Self::cache_path(dir, &hash, radius);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(t) = serde_json::from_str::<FshTable>(&text) {
                if t.version == FSH_FILE_VERSION && t.primitive_hash == hash && t.radius == radius {
                    return Ok(t);
                }
            }
        }
        let t = Self::build(set, radius);
        std::fs::create_dir_all(dir)?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string(&t)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(t)
    }

    pub fn cache_path(dir: &Path, hash: &str, radius: i32) -> PathBuf {
        dir.join(format!("fsh-v{FSH_FILE_VERSION}-{}-r{radius}.json", &hash[..16.min(hash.len())]))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: FshTable = serde_json::from_str(text)?;
        if t.version != FSH_FILE_VERSION {
            return Err(Error::Scenario(format!("unsupported heuristic table version {}", t.version)));
        }
        Ok(t)
    }

    fn euclid(&self, dx: i32, dy: i32) -> f64 {
        (dx as f64).hypot(dy as f64) * self.resolution / self.v_max
    }

    /// Cost-to-go (s) from `x` to `goal`. `goal_heading_any` ignores the goal's
    /// heading. States outside the table use Euclidean distance over `v_max`.
    pub fn value(&self, x: &LatticeState, goal: &LatticeState, goal_heading_any: bool) -> f64 {
        let mut dx = x.ix - goal.ix;
        let mut dy = x.iy - goal.iy;
        let h = self.headings as i32;
        let mut th = x.ith as i32;
        let table;
        if goal_heading_any {
            table = self.tables.len() - 1;
        } else if h % 4 == 0 {
            let q = goal.ith as i32 / (h / 4);
            // rotate the query by -q quarter turns
            for _ in 0..q {
                let (nx, ny) = (dy, -dx);
                dx = nx;
                dy = ny;
            }
            th = (th - q * (h / 4)).rem_euclid(h);
            table = (goal.ith as i32 % (h / 4)) as usize;
        } else {
            table = goal.ith as usize;
        }
        if dx.abs() > self.radius || dy.abs() > self.radius {
            return self.euclid(dx, dy);
        }
        let side = self.side() as i32;
        let idx = (((dy + self.radius) * side + (dx + self.radius)) * h + th) as usize;
        let v = self.tables[table][idx];
        // paths that leave the search box are at least three radii long
        let cap = 3.0 * self.radius as f64 * self.resolution / self.v_max;
        if v < 0.0 {
            cap.max(self.euclid(dx, dy))
        } else {
            v.min(cap)
        }
    }
}

fn backward_search(set: &PrimitiveSet, radius: i32, goals: &[u16]) -> Vec<f64> {
    let h = set.lattice.headings as i32;
    let big = 2 * radius;
    let side = (2 * big + 1) as i64;
    let index = |ix: i32, iy: i32, th: i32| -> Option<usize> {
        if ix.abs() > big || iy.abs() > big {
            return None;
        }
        Some((((iy + big) as i64 * side + (ix + big) as i64) * h as i64 + th as i64) as usize)
    };
    // predecessors: primitives grouped by end heading
    let mut by_end: Vec<Vec<(i32, i32, i32, f64)>> = vec![Vec::new(); h as usize];
    for p in set.primitives() {
        by_end[p.end.ith as usize].push((p.end.ix, p.end.iy, p.start.ith as i32, p.duration));
    }
    let n = (side * side) as usize * h as usize;
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &g in goals {
        let i = index(0, 0, g as i32).expect("origin in box");
        dist[i] = 0.0;
        heap.push(Item { cost: 0.0, index: i });
    }
    while let Some(Item { cost, index: i }) = heap.pop() {
        if cost > dist[i] {
            continue;
        }
        let th = (i % h as usize) as i32;
        let cell = i / h as usize;
        let ix = (cell as i64 % side) as i32 - big;
        let iy = (cell as i64 / side) as i32 - big;
        for &(ex, ey, sh, dur) in &by_end[th as usize] {
            let Some(j) = index(ix - ex, iy - ey, sh) else { continue };
            let nc = cost + dur;
            if nc < dist[j] {
                dist[j] = nc;
                heap.push(Item { cost: nc, index: j });
            }
        }
    }
    let rside = 2 * radius + 1;
    let mut out = Vec::with_capacity((rside * rside * h) as usize);
    for iy in -radius..=radius {
        for ix in -radius..=radius {
            for th in 0..h {
                let v = dist[index(ix, iy, th).expect("inner box")];
                out.push(if v.is_finite() { v } else { -1.0 });
            }
        }
    }
    out
}
