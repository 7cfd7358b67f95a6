//! Brute-force oracles over the raw occupancy grid, independent of the quadtree.
#![allow(dead_code)]

use rand::Rng;
use safelat_core::{OccupancyGrid, Point2};

pub struct Raster {
    pub grid: OccupancyGrid,
    pub cell: f64,
}

impl Raster {
    pub fn random(rng: &mut impl Rng, side: usize, cell: f64, boxes: usize) -> Self {
        let mut grid = OccupancyGrid::new(side, side);
        for _ in 0..boxes {
            let w = rng.random_range(1..side / 4);
            let h = rng.random_range(1..side / 4);
            let x0 = rng.random_range(0..side - w);
            let y0 = rng.random_range(0..side - h);
            for y in y0..y0 + h {
                for x in x0..x0 + w {
                    grid.set(x, y, true);
                }
            }
        }
        Self { grid, cell }
    }

    pub fn extent(&self) -> f64 {
        self.grid.width() as f64 * self.cell
    }

    fn occupied(&self, i: i64, j: i64) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.grid.width()
            && (j as usize) < self.grid.height()
            && self.grid.get(i as usize, j as usize)
    }

    /// Closed-cell membership: boundary points belong to every touching cell.
    pub fn point_hits(&self, p: &Point2) -> bool {
        let (fx, fy) = (p.x / self.cell, p.y / self.cell);
        let (i, j) = (fx.floor() as i64, fy.floor() as i64);
        for dj in -1..=1 {
            for di in -1..=1 {
                let (ci, cj) = (i + di, j + dj);
                let inside = fx >= ci as f64 - 1e-12
                    && fx <= (ci + 1) as f64 + 1e-12
                    && fy >= cj as f64 - 1e-12
                    && fy <= (cj + 1) as f64 + 1e-12;
                if inside && self.occupied(ci, cj) {
                    return true;
                }
            }
        }
        false
    }

    /// Rasterized overlap of a counter-clockwise convex polygon: interior samples
    /// at cell/4, dense boundary samples, and occupied-cell corners inside the polygon.
    pub fn polygon_hits(&self, v: &[Point2]) -> bool {
        let inside = |p: &Point2| {
            (0..v.len()).all(|k| {
                let (a, b) = (v[k], v[(k + 1) % v.len()]);
                (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= -1e-12
            })
        };
        let (mut lo, mut hi) = (v[0], v[0]);
        for p in v {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let step = self.cell / 4.0;
        let mut y = (lo.y / step).floor() * step;
        while y <= hi.y {
            let mut x = (lo.x / step).floor() * step;
            while x <= hi.x {
                let p = Point2::new(x, y);
                if inside(&p) && self.point_hits(&p) {
                    return true;
                }
                x += step;
            }
            y += step;
        }
        for k in 0..v.len() {
            let (a, b) = (v[k], v[(k + 1) % v.len()]);
            let n = ((a.distance(&b) / (self.cell / 64.0)).ceil() as usize).max(1);
            for s in 0..=n {
                let t = s as f64 / n as f64;
                if self.point_hits(&Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))) {
                    return true;
                }
            }
        }
        false
    }

    /// Exact: distance from `c` to the nearest occupied closed cell is at most `r`.
    pub fn disc_hits(&self, c: &Point2, r: f64) -> bool {
        for j in 0..self.grid.height() {
            for i in 0..self.grid.width() {
                if !self.grid.get(i, j) {
                    continue;
                }
                let (x0, y0) = (i as f64 * self.cell, j as f64 * self.cell);
                let dx = (x0 - c.x).max(0.0).max(c.x - x0 - self.cell);
                let dy = (y0 - c.y).max(0.0).max(c.y - y0 - self.cell);
                if dx.hypot(dy) <= r {
                    return true;
                }
            }
        }
        false
    }
}
