//! Multi-resolution (quadtree) occupancy map.
//!
//! Leaves are squares whose side is `max_resolution * 2^k`. A square region
//! is stored as a single leaf only when every finest cell it covers has the
//! same occupancy (and, optionally, its side does not exceed a cap). Cell
//! extents are half-open `[low, high)` for point location and closed for
//! contact tests. Anything outside the root extent is treated as occupied.

mod distance;
pub mod io;

pub use io::{load_pgm_map, parse_pgm, MapSidecar, PgmImage};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, ConvexPolygon, Point2, Pose2};
use serde::{Deserialize, Serialize};

/// Dense boolean occupancy grid. Row 0 is the bottom row (lowest y).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, cells: vec![false; width * height] }
    }

    pub fn from_rows(rows: Vec<Vec<bool>>) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        let cells = rows.into_iter().flatten().collect();
        Self { width, height, cells }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Occupancy of column `x`, row `y`; out-of-range cells read as free (padding).
    pub fn get(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, occupied: bool) {
        self.cells[y * self.width + x] = occupied;
    }

    /// Marks every cell whose center lies in the closed box.
    pub fn fill_box(&mut self, cell_size: f64, min: Point2, max: Point2) {
        for y in 0..self.height {
            for x in 0..self.width {
                let cx = (x as f64 + 0.5) * cell_size;
                let cy = (y as f64 + 0.5) * cell_size;
                if cx >= min.x && cx <= max.x && cy >= min.y && cy <= max.y {
                    self.set(x, y, true);
                }
            }
        }
    }
}

/// Integer key of a quadtree square: lower-left corner and side, in finest cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub x: u32,
    pub y: u32,
    pub span: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeafId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub center: Point2,
    pub size: f64,
    pub occupied: bool,
    #[serde(skip)]
    pub key: Option<CellKey>,
}

impl MapCell {
    pub fn bounds(&self) -> Aabb {
        let h = self.size / 2.0;
        Aabb::new(
            Point2::new(self.center.x - h, self.center.y - h),
            Point2::new(self.center.x + h, self.center.y + h),
        )
    }

    /// Half-open containment `[low, high)`.
    pub fn contains(&self, p: &Point2) -> bool {
        let b = self.bounds();
        p.x >= b.min.x && p.x < b.max.x && p.y >= b.min.y && p.y < b.max.y
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(LeafId),
    Inner { children: [u32; 4], any_occupied: bool },
}

enum Sub {
    Uniform(bool),
    Split(u32),
}

/// x-extent of the polygon `v` (cell units) within the closed strip `a <= y <= b`.
fn strip_extent(v: &[(f64, f64)], a: f64, b: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..v.len() {
        let (px, py) = v[k];
        let (qx, qy) = v[(k + 1) % v.len()];
        let dy = qy - py;
        let (t0, t1) = if dy == 0.0 {
            if py < a || py > b {
                continue;
            }
            (0.0, 1.0)
        } else {
            let (ta, tb) = ((a - py) / dy, (b - py) / dy);
            (ta.min(tb).max(0.0), ta.max(tb).min(1.0))
        };
        if t0 > t1 {
            continue;
        }
        for t in [t0, t1] {
            let x = px + t * (qx - px);
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo, hi)
}

// `f64::floor` is a libm call on baseline x86-64; values here are small
// coordinates in cell units; out-of-range values saturate
fn floor_i(x: f64) -> i64 {
    let i = x as i64;
    i - i64::from((i as f64) > x)
}

fn ceil_i(x: f64) -> i64 {
    let i = x as i64;
    i + i64::from((i as f64) < x)
}

#[derive(Debug, Clone)]
pub struct MultiResMap {
    origin: Point2,
    max_resolution: f64,
    side: u32,
    max_leaf_span: u32,
    nodes: Vec<Node>,
    root: u32,
    leaves: Vec<MapCell>,
    /// Finest-cell centre distance to the nearest occupied centre, in cells.
    obstacle_distance: Vec<f32>,
    /// Summed-area table of occupied finest cells, `(side + 1)^2` entries.
    occupied_sums: Vec<u32>,
}

impl MultiResMap {
    /// Builds a maximally merged quadtree from a grid, padding it with free
    /// cells up to a power-of-two square.
    pub fn from_grid(grid: &OccupancyGrid, cell_size: f64, origin: Point2) -> Result<Self> {
        Self::build(grid, cell_size, origin, None)
    }

    /// Like [`MultiResMap::from_grid`] but no leaf is larger than `max_leaf_size`
    /// (rounded down to a power-of-two multiple of `cell_size`).
    pub fn from_grid_capped(
        grid: &OccupancyGrid,
        cell_size: f64,
        origin: Point2,
        max_leaf_size: f64,
    ) -> Result<Self> {
        Self::build(grid, cell_size, origin, Some(max_leaf_size))
    }

    fn build(
        grid: &OccupancyGrid,
        cell_size: f64,
        origin: Point2,
        cap: Option<f64>,
    ) -> Result<Self> {
        if grid.width == 0 || grid.height == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::NonPositiveCellSize(cell_size));
        }
        let side = (grid.width.max(grid.height) as u32).next_power_of_two();
        let max_leaf_span = match cap {
            None => side,
            Some(c) => {
                let ratio = (c / cell_size * (1.0 + 1e-9)).floor().max(1.0) as u32;
                // largest power of two not above ratio
                1u32 << (31 - ratio.leading_zeros())
            }
        };
        let mut map = Self {
            origin,
            max_resolution: cell_size,
            side,
            max_leaf_span,
            nodes: Vec::new(),
            leaves: Vec::new(),
            root: 0,
            obstacle_distance: Vec::new(),
            occupied_sums: Vec::new(),
        };
        map.root = match map.build_rec(grid, 0, 0, side) {
            Sub::Uniform(v) => map.make_leaf(0, 0, side, v),
            Sub::Split(n) => n,
        };
        let (w, h) = (grid.width, grid.height);
        map.obstacle_distance =
            distance::distance_field(side as usize, |x, y| x < w && y < h && grid.get(x, y));
        let n = side as usize + 1;
        map.occupied_sums = vec![0; n * n];
        for y in 1..n {
            let mut run = 0;
            for x in 1..n {
                run += u32::from(x <= w && y <= h && grid.get(x - 1, y - 1));
                map.occupied_sums[y * n + x] = map.occupied_sums[(y - 1) * n + x] + run;
            }
        }
        Ok(map)
    }

    fn build_rec(&mut self, grid: &OccupancyGrid, x: u32, y: u32, span: u32) -> Sub {
        if span == 1 {
            return Sub::Uniform(grid.get(x as usize, y as usize));
        }
        let h = span / 2;
        let quads = [(x, y), (x + h, y), (x, y + h), (x + h, y + h)];
        let subs: Vec<Sub> = quads.iter().map(|&(qx, qy)| self.build_rec(grid, qx, qy, h)).collect();
        if span <= self.max_leaf_span {
            if let Sub::Uniform(v0) = subs[0] {
                if subs.iter().all(|s| matches!(s, Sub::Uniform(v) if *v == v0)) {
                    return Sub::Uniform(v0);
                }
            }
        }
        let mut children = [0u32; 4];
        for (i, (s, &(qx, qy))) in subs.into_iter().zip(quads.iter()).enumerate() {
            children[i] = match s {
                Sub::Uniform(v) => self.make_leaf(qx, qy, h, v),
                Sub::Split(n) => n,
            };
        }
        let any_occupied = children.iter().any(|&c| self.node_any_occupied(c));
        self.nodes.push(Node::Inner { children, any_occupied });
        Sub::Split(self.nodes.len() as u32 - 1)
    }

    fn make_leaf(&mut self, x: u32, y: u32, span: u32, occupied: bool) -> u32 {
        let key = CellKey { x, y, span };
        let id = LeafId(self.leaves.len() as u32);
        self.leaves.push(self.cell_from_key(key, occupied));
        self.nodes.push(Node::Leaf(id));
        self.nodes.len() as u32 - 1
    }

    fn cell_from_key(&self, key: CellKey, occupied: bool) -> MapCell {
        let size = key.span as f64 * self.max_resolution;
        MapCell {
            center: Point2::new(
                self.origin.x + (key.x as f64 + key.span as f64 / 2.0) * self.max_resolution,
                self.origin.y + (key.y as f64 + key.span as f64 / 2.0) * self.max_resolution,
            ),
            size,
            occupied,
            key: Some(key),
        }
    }

    fn node_any_occupied(&self, n: u32) -> bool {
        match &self.nodes[n as usize] {
            Node::Leaf(id) => self.leaves[id.0 as usize].occupied,
            Node::Inner { any_occupied, .. } => *any_occupied,
        }
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn max_resolution(&self) -> f64 {
        self.max_resolution
    }

    /// Side length of the (square) root extent in meters.
    pub fn root_extent(&self) -> f64 {
        self.side as f64 * self.max_resolution
    }

    pub fn side_cells(&self) -> u32 {
        self.side
    }

    pub fn bounds(&self) -> Aabb {
        let e = self.root_extent();
        Aabb::new(self.origin, Point2::new(self.origin.x + e, self.origin.y + e))
    }

    pub fn leaves(&self) -> &[MapCell] {
        &self.leaves
    }

    pub fn leaf(&self, id: LeafId) -> &MapCell {
        &self.leaves[id.0 as usize]
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Half-open containment in the root extent.
    pub fn contains_point(&self, p: &Point2) -> bool {
        self.finest_index(p).is_some()
    }

    fn finest_index(&self, p: &Point2) -> Option<(u32, u32)> {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return None;
        }
        let fx = floor_i((p.x - self.origin.x) / self.max_resolution);
        let fy = floor_i((p.y - self.origin.y) / self.max_resolution);
        let s = self.side as i64;
        if fx >= 0 && fy >= 0 && fx < s && fy < s {
            Some((fx as u32, fy as u32))
        } else {
            None
        }
    }

    fn finest_distance(&self, p: &Point2) -> Option<f64> {
        let (fx, fy) = self.finest_index(p)?;
        Some(self.obstacle_distance[(fy * self.side + fx) as usize] as f64)
    }

    pub fn leaf_at(&self, p: &Point2) -> Option<LeafId> {
        let (fx, fy) = self.finest_index(p)?;
        let mut node = self.root;
        let (mut x, mut y, mut span) = (0u32, 0u32, self.side);
        loop {
            match &self.nodes[node as usize] {
                Node::Leaf(id) => return Some(*id),
                Node::Inner { children, .. } => {
                    span /= 2;
                    let right = fx >= x + span;
                    let top = fy >= y + span;
                    if right {
                        x += span;
                    }
                    if top {
                        y += span;
                    }
                    node = children[(right as usize) + 2 * (top as usize)];
                }
            }
        }
    }

    /// The unique leaf whose half-open extent contains `p`.
    pub fn cell_at(&self, p: &Point2) -> Result<&MapCell> {
        self.leaf_at(p)
            .map(|id| self.leaf(id))
            .ok_or(Error::OutsideExtent { x: p.x, y: p.y })
    }

    /// Whether the finest-resolution cell containing `p` is occupied
    /// (outside the extent counts as occupied).
    pub fn is_occupied(&self, p: &Point2) -> bool {
        self.finest_distance(p).is_none_or(|d| d == 0.0)
    }

    fn leaf_id_of(&self, cell: &MapCell) -> Result<LeafId> {
        let key = cell.key.ok_or(Error::NotALeaf)?;
        let probe = self.cell_from_key(key, cell.occupied).center;
        let id = self.leaf_at(&probe).ok_or(Error::NotALeaf)?;
        if self.leaf(id).key == Some(key) {
            Ok(id)
        } else {
            Err(Error::NotALeaf)
        }
    }

    /// Visits every leaf whose closed integer box overlaps the closed integer box
    /// `[x0, x1] x [y0, y1]` (finest-cell units).
    fn visit_int_box(&self, x0: i64, y0: i64, x1: i64, y1: i64, out: &mut Vec<LeafId>) {
        let mut stack = vec![(self.root, 0u32, 0u32, self.side)];
        while let Some((node, x, y, span)) = stack.pop() {
            let (nx0, ny0) = (x as i64, y as i64);
            let (nx1, ny1) = (nx0 + span as i64, ny0 + span as i64);
            if nx1 < x0 || x1 < nx0 || ny1 < y0 || y1 < ny0 {
                continue;
            }
            match &self.nodes[node as usize] {
                Node::Leaf(id) => out.push(*id),
                Node::Inner { children, .. } => {
                    let h = span / 2;
                    stack.push((children[0], x, y, h));
                    stack.push((children[1], x + h, y, h));
                    stack.push((children[2], x, y + h, h));
                    stack.push((children[3], x + h, y + h, h));
                }
            }
        }
    }

    /// Leaves sharing an edge or a corner with `cell` (8-connectivity), sorted by id.
    pub fn adjacent(&self, cell: &MapCell) -> Result<Vec<MapCell>> {
        let id = self.leaf_id_of(cell)?;
        Ok(self.adjacent_ids(id).into_iter().map(|i| *self.leaf(i)).collect())
    }

    pub fn adjacent_ids(&self, id: LeafId) -> Vec<LeafId> {
        let key = self.leaf(id).key.expect("leaves carry keys");
        let mut out = Vec::new();
        self.visit_int_box(
            key.x as i64,
            key.y as i64,
            (key.x + key.span) as i64,
            (key.y + key.span) as i64,
            &mut out,
        );
        out.retain(|&l| l != id);
        out.sort_unstable();
        out
    }

    /// Depth-first walk over nodes whose square passes `keep`, calling `f` on
    /// each such leaf until it returns true. Free subtrees are skipped when
    /// `occupied_only` is set.
    fn walk<K, F>(&self, occupied_only: bool, keep: K, mut f: F) -> bool
    where
        K: Fn(&Aabb) -> bool,
        F: FnMut(&MapCell) -> bool,
    {
        // three siblings wait per level at most, and the tree is at most 32 deep
        let mut stack = [(0u32, 0u32, 0u32, 0u32); 100];
        stack[0] = (self.root, 0, 0, self.side);
        let mut top = 1;
        let res = self.max_resolution;
        while top > 0 {
            top -= 1;
            let (node, x, y, span) = stack[top];
            if occupied_only && !self.node_any_occupied(node) {
                continue;
            }
            let nb = Aabb::new(
                Point2::new(self.origin.x + x as f64 * res, self.origin.y + y as f64 * res),
                Point2::new(self.origin.x + (x + span) as f64 * res, self.origin.y + (y + span) as f64 * res),
            );
            if !keep(&nb) {
                continue;
            }
            match &self.nodes[node as usize] {
                Node::Leaf(id) => {
                    if f(self.leaf(*id)) {
                        return true;
                    }
                }
                Node::Inner { children, .. } => {
                    let h = span / 2;
                    stack[top] = (children[0], x, y, h);
                    stack[top + 1] = (children[1], x + h, y, h);
                    stack[top + 2] = (children[2], x, y + h, h);
                    stack[top + 3] = (children[3], x + h, y + h, h);
                    top += 4;
                }
            }
        }
        false
    }

    /// Visits leaves overlapping a closed world box.
    fn visit_world_box<F: FnMut(&MapCell) -> bool>(&self, b: &Aabb, occupied_only: bool, f: F) -> bool {
        self.walk(occupied_only, |nb| nb.overlaps(b), f)
    }

    /// Occupied leaves overlapping a closed world box.
    pub fn occupied_in_box(&self, b: &Aabb) -> Vec<MapCell> {
        let mut out = Vec::new();
        self.visit_world_box(b, true, |c| {
            out.push(*c);
            false
        });
        out
    }

    /// Ids of all leaves touching a closed world box.
    pub fn leaves_in_box(&self, b: &Aabb) -> Vec<LeafId> {
        let mut out = Vec::new();
        self.visit_world_box(b, false, |c| {
            out.push(self.leaf_at(&c.center).expect("leaf centers are inside"));
            false
        });
        out.sort_unstable();
        out
    }

    /// Whether an occupied finest cell touches the closed box `[x0, x1] x [y0, y1]`
    /// given in cell units.
    #[inline]
    fn box_hit(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
        let last = self.side as i64 - 1;
        let (i0, i1) = (ceil_i(x0).saturating_sub(1).max(0), floor_i(x1).min(last));
        let (j0, j1) = (ceil_i(y0).saturating_sub(1).max(0), floor_i(y1).min(last));
        if i0 > i1 || j0 > j1 {
            return false;
        }
        let n = self.side as usize + 1;
        let at = |i: i64, j: i64| self.occupied_sums[j as usize * n + i as usize];
        at(i1 + 1, j1 + 1) + at(i0, j0) > at(i0, j1 + 1) + at(i1 + 1, j0)
    }

    /// Whether an occupied finest cell of row `j` touches `[lo, hi]` (cell units).
    #[inline(always)]
    fn row_hit(&self, j: u32, lo: f64, hi: f64) -> bool {
        let i0 = ceil_i(lo).saturating_sub(1).max(0);
        let i1 = floor_i(hi).min(self.side as i64 - 1);
        if i0 > i1 {
            return false;
        }
        let n = self.side as usize + 1;
        let (below, above) = (&self.occupied_sums[j as usize * n..], &self.occupied_sums[(j as usize + 1) * n..]);
        let (a, b) = (i0 as usize, i1 as usize + 1);
        above[b] + below[a] > above[a] + below[b]
    }

    /// Rows whose closed strip `[j, j + 1]` meets `[lo, hi]` (cell units).
    fn rows_touching(&self, lo: f64, hi: f64) -> std::ops::Range<u32> {
        let j0 = ceil_i(lo).saturating_sub(1).max(0);
        let j1 = floor_i(hi).saturating_add(1).min(self.side as i64);
        if j1 <= j0 {
            return 0..0;
        }
        j0 as u32..j1 as u32
    }

    /// True iff no occupied leaf touches the polygon and it lies inside the extent.
    pub fn region_free(&self, polygon: &ConvexPolygon) -> bool {
        self.posed_region_free(polygon.vertices(), &Pose2::new(0.0, 0.0, 0.0))
    }

    /// `region_free` for a body-frame convex polygon placed at `pose`.
    pub fn posed_region_free(&self, vertices: &[Point2], pose: &Pose2) -> bool {
        const INLINE: usize = 16;
        let mut buf = [(0.0, 0.0); INLINE];
        let heap: Vec<(f64, f64)>;
        let res = self.max_resolution;
        let (s, c) = pose.theta.sin_cos();
        let to_cells = |p: &Point2| {
            (
                (pose.x + c * p.x - s * p.y - self.origin.x) / res,
                (pose.y + s * p.x + c * p.y - self.origin.y) / res,
            )
        };
        let v: &[(f64, f64)] = if vertices.len() <= INLINE {
            for (d, p) in buf.iter_mut().zip(vertices) {
                *d = to_cells(p);
            }
            &buf[..vertices.len()]
        } else {
            heap = vertices.iter().map(to_cells).collect();
            &heap
        };
        let side = self.side as f64;
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in v {
            if !(x >= 0.0 && y >= 0.0 && x <= side && y <= side) {
                return false;
            }
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
        if !self.box_hit(xmin, xmax, ymin, ymax) {
            return true;
        }
        // rows with nothing under the bounding box need no exact extent
        self.rows_touching(ymin, ymax).all(|j| {
            if !self.row_hit(j, xmin, xmax) {
                return true;
            }
            let (lo, hi) = strip_extent(v, (j as f64).max(ymin), ((j + 1) as f64).min(ymax));
            !(lo <= hi && self.row_hit(j, lo, hi))
        })
    }

    /// Tree-walk reference for `region_free`.
    #[cfg(test)]
    fn region_free_walk(&self, polygon: &ConvexPolygon) -> bool {
        self.bounds().contains_box(&polygon.aabb()) && !self.walk(true, |nb| polygon.intersects_aabb(nb), |_| true)
    }

    /// Cheap sufficient test: true only if the closed disc is certainly inside
    /// the extent and clear of occupied cells.
    pub fn disc_certainly_clear(&self, center: &Point2, radius: f64) -> bool {
        let res = self.max_resolution;
        let (u, v, r) = ((center.x - self.origin.x) / res, (center.y - self.origin.y) / res, radius / res);
        let s = self.side as f64;
        if !(u - r >= 0.0 && v - r >= 0.0 && u + r <= s && v + r <= s) {
            return false;
        }
        let last = self.side as usize - 1;
        let d = self.obstacle_distance[(v as usize).min(last) * self.side as usize + (u as usize).min(last)] as f64;
        // points of either cell are within half a diagonal of its centre
        d * (1.0 - 1e-6) - std::f64::consts::SQRT_2 > r
    }

    /// True iff the closed disc touches an occupied leaf or leaves the extent.
    pub fn disc_collides(&self, center: &Point2, radius: f64) -> bool {
        let db = Aabb::new(
            Point2::new(center.x - radius, center.y - radius),
            Point2::new(center.x + radius, center.y + radius),
        );
        if !self.bounds().contains_box(&db) {
            return true;
        }
        if self.disc_certainly_clear(center, radius) {
            return false;
        }
        let res = self.max_resolution;
        let (cx, cy) = ((center.x - self.origin.x) / res, (center.y - self.origin.y) / res);
        let r = radius / res;
        if !self.box_hit(cx - r, cx + r, cy - r, cy + r) {
            return false;
        }
        for j in self.rows_touching(cy - r, cy + r) {
            let dy = if cy < j as f64 {
                j as f64 - cy
            } else if cy > (j + 1) as f64 {
                cy - (j + 1) as f64
            } else {
                0.0
            };
            if dy > r {
                continue;
            }
            let hw = (r * r - dy * dy).sqrt();
            if self.row_hit(j, cx - hw, cx + hw) {
                return true;
            }
        }
        false
    }

    #[cfg(test)]
    fn disc_collides_walk(&self, center: &Point2, radius: f64) -> bool {
        let db = Aabb::new(
            Point2::new(center.x - radius, center.y - radius),
            Point2::new(center.x + radius, center.y + radius),
        );
        !self.bounds().contains_box(&db) || self.walk(true, |nb| nb.distance_to(center) <= radius, |c| c.occupied)
    }

    /// Distance from `p` to the nearest occupied leaf or to the extent border,
    /// whichever is closer. Zero when `p` is occupied or outside.
    pub fn clearance(&self, p: &Point2) -> f64 {
        if self.is_occupied(p) {
            return 0.0;
        }
        let b = self.bounds();
        let border = (p.x - b.min.x)
            .min(b.max.x - p.x)
            .min(p.y - b.min.y)
            .min(b.max.y - p.y);
        let mut best = border;
        let res = self.max_resolution;
        let mut stack = vec![(self.root, 0u32, 0u32, self.side)];
        while let Some((node, x, y, span)) = stack.pop() {
            if !self.node_any_occupied(node) {
                continue;
            }
            let nb = Aabb::new(
                Point2::new(self.origin.x + x as f64 * res, self.origin.y + y as f64 * res),
                Point2::new(
                    self.origin.x + (x + span) as f64 * res,
                    self.origin.y + (y + span) as f64 * res,
                ),
            );
            let d = nb.distance_to(p);
            if d >= best {
                continue;
            }
            match &self.nodes[node as usize] {
                Node::Leaf(_) => best = d,
                Node::Inner { children, .. } => {
                    let h = span / 2;
                    stack.push((children[0], x, y, h));
                    stack.push((children[1], x + h, y, h));
                    stack.push((children[2], x, y + h, h));
                    stack.push((children[3], x + h, y + h, h));
                }
            }
        }
        best
    }

    /// The `(cell.size / target)^2` squares of side `target` tiling `cell`.
    pub fn subcells(&self, cell: &MapCell, target: f64) -> Result<Vec<MapCell>> {
        let ratio = cell.size / target;
        let n = ratio.round();
        let span_t = target / self.max_resolution;
        let valid = target > 0.0
            && (ratio - n).abs() < 1e-9
            && n >= 2.0
            && (n as u64).is_power_of_two()
            && (span_t - span_t.round()).abs() < 1e-9
            && (span_t.round() as u64).is_power_of_two();
        if !valid {
            return Err(Error::InvalidTarget { size: cell.size, target });
        }
        let n = n as u32;
        let min = cell.bounds().min;
        let mut out = Vec::with_capacity((n * n) as usize);
        let tspan = span_t.round() as u32;
        for j in 0..n {
            for i in 0..n {
                let key = cell.key.map(|k| CellKey { x: k.x + i * tspan, y: k.y + j * tspan, span: tspan });
                out.push(MapCell {
                    center: Point2::new(
                        min.x + (i as f64 + 0.5) * target,
                        min.y + (j as f64 + 0.5) * target,
                    ),
                    size: target,
                    occupied: cell.occupied,
                    key,
                });
            }
        }
        Ok(out)
    }

    /// The square of side `f_plus` on the `f_plus`-aligned grid (anchored at the
    /// map origin) containing `cell`. When `f_plus` is not a power-of-two multiple
    /// of the cell size the square containing the cell's center is returned.
    /// Occupancy is copied from `cell` and must be re-checked by the caller.
    pub fn adjust(&self, cell: &MapCell, f_plus: f64) -> Result<MapCell> {
        if cell.size > f_plus * (1.0 + 1e-9) {
            return Err(Error::CellLargerThanAdjust { size: cell.size, f_plus });
        }
        let ix = ((cell.center.x - self.origin.x) / f_plus).floor();
        let iy = ((cell.center.y - self.origin.y) / f_plus).floor();
        let span = f_plus / self.max_resolution;
        let key = if (span - span.round()).abs() < 1e-9 {
            let s = span.round() as u32;
            Some(CellKey { x: ix as u32 * s, y: iy as u32 * s, span: s })
        } else {
            None
        };
        Ok(MapCell {
            center: Point2::new(
                self.origin.x + (ix + 0.5) * f_plus,
                self.origin.y + (iy + 0.5) * f_plus,
            ),
            size: f_plus,
            occupied: cell.occupied,
            key,
        })
    }

    /// Expands every leaf back to finest resolution (padded square grid).
    pub fn decompose(&self) -> OccupancyGrid {
        let s = self.side as usize;
        let mut g = OccupancyGrid::new(s, s);
        for leaf in &self.leaves {
            if !leaf.occupied {
                continue;
            }
            let k = leaf.key.expect("leaves carry keys");
            for y in k.y..k.y + k.span {
                for x in k.x..k.x + k.span {
                    g.set(x as usize, y as usize, true);
                }
            }
        }
        g
    }

    /// Leaves as serializable records, ordered by id.
    pub fn leaf_records(&self) -> Vec<LeafRecord> {
        self.leaves
            .iter()
            .map(|c| LeafRecord { center: [c.center.x, c.center.y], size: c.size, occupied: c.occupied })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafRecord {
    pub center: [f64; 2],
    pub size: f64,
    pub occupied: bool,
}
