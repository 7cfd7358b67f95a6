//! Robot shape as a union of convex polygons in the body frame.

use crate::error::{Error, Result};
use crate::geometry::{segment_distance, ConvexPolygon, Point2, Pose2};
use crate::map::MultiResMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    polygons: Vec<ConvexPolygon>,
    inscribed: f64,
    bounding: f64,
}

#[derive(Serialize, Deserialize)]
struct FootprintFile {
    polygons: Vec<Vec<[f64; 2]>>,
}

impl Footprint {
    pub fn new(polygons: Vec<ConvexPolygon>) -> Result<Self> {
        if polygons.is_empty() {
            return Err(Error::InvalidFootprint("no polygons".into()));
        }
        let origin = Point2::default();
        if !polygons.iter().any(|p| p.contains(&origin)) {
            return Err(Error::InvalidFootprint("body origin lies outside the shape".into()));
        }
        let inscribed = union_boundary_distance(&polygons, &origin);
        let bounding = polygons
            .iter()
            .flat_map(|p| p.vertices().iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        Ok(Self { polygons, inscribed, bounding })
    }

    /// Rectangle of `length` along the body x axis and `width` along y, centred on the origin.
    pub fn rectangle(length: f64, width: f64) -> Self {
        Self::new(vec![ConvexPolygon::rectangle(Point2::default(), length, width)])
            .expect("centred rectangle contains its origin")
    }

    /// T shape: a `bar_length x thickness` body along x and a `cross_length x thickness`
    /// cross bar at its front end.
    pub fn t_shape(bar_length: f64, cross_length: f64, thickness: f64) -> Self {
        let bar = ConvexPolygon::rectangle(Point2::default(), bar_length, thickness);
        let cross = ConvexPolygon::rectangle(
            Point2::new(bar_length / 2.0 - thickness / 2.0, 0.0),
            thickness,
            cross_length,
        );
        Self::new(vec![bar, cross]).expect("T shape contains its origin")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: FootprintFile = serde_json::from_str(text)?;
        let polygons = f
            .polygons
            .into_iter()
            .enumerate()
            .map(|(i, pts)| {
                ConvexPolygon::new(pts.into_iter().map(|[x, y]| Point2::new(x, y)).collect())
                    .ok_or_else(|| Error::InvalidFootprint(format!("polygon {i} is degenerate or not convex")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(polygons)
    }

    pub fn to_json(&self) -> String {
        let f = FootprintFile {
            polygons: self
                .polygons
                .iter()
                .map(|p| p.vertices().iter().map(|v| [v.x, v.y]).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&f).expect("footprint serializes")
    }

    pub fn polygons(&self) -> &[ConvexPolygon] {
        &self.polygons
    }

    /// Radius of the largest origin-centred disc inside the shape.
    pub fn inscribed_radius(&self) -> f64 {
        self.inscribed
    }

    /// Radius of the smallest origin-centred disc containing the shape.
    pub fn bounding_radius(&self) -> f64 {
        self.bounding
    }

    pub fn placed(&self, pose: &Pose2) -> Vec<ConvexPolygon> {
        self.polygons.iter().map(|p| p.transformed(pose)).collect()
    }

    /// True iff the shape at `pose` touches an occupied leaf or leaves the map.
    pub fn collides(&self, pose: &Pose2, map: &MultiResMap) -> bool {
        let at = pose.position();
        // the origin is part of the shape
        if map.is_occupied(&at) {
            return true;
        }
        if map.disc_certainly_clear(&at, self.bounding) {
            return false;
        }
        self.polygons.iter().any(|p| !map.posed_region_free(p.vertices(), pose))
    }
}

/// Disc collision test used for the optimistic heuristic shape.
pub fn disc_collides(center: &Point2, radius: f64, map: &MultiResMap) -> bool {
    map.disc_collides(center, radius)
}

/// Distance from `p` to the boundary of the union of `polygons`.
///
/// An edge portion belongs to the union boundary when the region just outside
/// it is not covered by another polygon.
fn union_boundary_distance(polygons: &[ConvexPolygon], p: &Point2) -> f64 {
    const OFFSET: f64 = 1e-9;
    let mut best = f64::INFINITY;
    for (i, poly) in polygons.iter().enumerate() {
        for (a, b) in poly.edges() {
            let len = a.distance(&b);
            if len == 0.0 {
                continue;
            }
            let n = Point2::new((b.y - a.y) / len * OFFSET, (a.x - b.x) / len * OFFSET);
            let oa = Point2::new(a.x + n.x, a.y + n.y);
            let ob = Point2::new(b.x + n.x, b.y + n.y);
            let mut pieces = vec![(0.0, 1.0)];
            for (j, other) in polygons.iter().enumerate() {
                if i == j {
                    continue;
                }
                if let Some((t0, t1)) = clip_segment(other, &oa, &ob) {
                    pieces = subtract(&pieces, t0, t1);
                }
            }
            for (t0, t1) in pieces {
                let s = Point2::new(a.x + (b.x - a.x) * t0, a.y + (b.y - a.y) * t0);
                let e = Point2::new(a.x + (b.x - a.x) * t1, a.y + (b.y - a.y) * t1);
                best = best.min(segment_distance(p, &s, &e));
            }
        }
    }
    best
}

/// Parameter interval of segment `ab` inside the closed convex polygon (Cyrus-Beck).
fn clip_segment(poly: &ConvexPolygon, a: &Point2, b: &Point2) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let d = b.sub(a);
    for (p, q) in poly.edges() {
        let n = Point2::new(q.y - p.y, p.x - q.x);
        let num = n.dot(&a.sub(&p));
        let den = n.dot(&d);
        if den.abs() < 1e-15 {
            if num > 0.0 {
                return None;
            }
            continue;
        }
        let t = -num / den;
        if den > 0.0 {
            t1 = t1.min(t);
        } else {
            t0 = t0.max(t);
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

fn subtract(pieces: &[(f64, f64)], c0: f64, c1: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(s, e) in pieces {
        if c1 <= s || c0 >= e {
            out.push((s, e));
            continue;
        }
        if c0 > s {
            out.push((s, c0));
        }
        if c1 < e {
            out.push((c1, e));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::OccupancyGrid;
    use std::f64::consts::PI;

    fn empty_map() -> MultiResMap {
        MultiResMap::from_grid(&OccupancyGrid::new(64, 64), 0.25, Point2::default()).unwrap()
    }

    /// Map with the half plane x >= wall_x occupied (wall_x on a cell edge).
    fn wall_map(wall_x: f64) -> MultiResMap {
        let res = 0.125;
        let mut g = OccupancyGrid::new(128, 128);
        g.fill_box(res, Point2::new(wall_x, 0.0), Point2::new(100.0, 100.0));
        MultiResMap::from_grid(&g, res, Point2::default()).unwrap()
    }

    #[test]
    fn free_map_never_collides() {
        let m = empty_map();
        let fp = Footprint::t_shape(3.0, 2.0, 0.75);
        for k in 0..16 {
            assert!(!fp.collides(&Pose2::new(8.0, 8.0, k as f64 * PI / 8.0), &m));
        }
    }

    #[test]
    fn outside_the_map_collides() {
        let m = empty_map();
        assert!(Footprint::rectangle(1.0, 1.0).collides(&Pose2::new(-1.0, 3.0, 0.0), &m));
        assert!(Footprint::rectangle(1.0, 1.0).collides(&Pose2::new(0.2, 3.0, 0.0), &m));
    }

    #[test]
    fn rectangle_near_wall_depends_on_heading() {
        // wall face at x = 10; rectangle centre 0.2 m beyond half-width
        let m = wall_map(10.0);
        let fp = Footprint::rectangle(3.0, 0.75);
        let pose_parallel = Pose2::new(10.0 - 0.375 - 0.2, 8.0, PI / 2.0);
        assert!(!fp.collides(&pose_parallel, &m));
        let pose_diag = Pose2::new(10.0 - 0.375 - 0.2, 8.0, PI / 4.0);
        assert!(fp.collides(&pose_diag, &m));
    }

    #[test]
    fn inscribed_radii() {
        assert!((Footprint::rectangle(3.0, 0.75).inscribed_radius() - 0.375).abs() < 1e-12);
        assert!((Footprint::rectangle(1.0, 1.0).inscribed_radius() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn t_shape_inscribed_matches_ray_casting() {
        let fp = Footprint::t_shape(3.0, 2.0, 0.75);
        // ray casting: march each ray until it leaves the union
        let mut oracle = f64::INFINITY;
        for k in 0..3600 {
            let a = k as f64 * 2.0 * PI / 3600.0;
            let dir = Point2::new(a.cos(), a.sin());
            let mut r = 0.0;
            let step = 1e-4;
            while fp.polygons().iter().any(|p| p.contains(&Point2::new(dir.x * r, dir.y * r))) {
                r += step;
            }
            oracle = oracle.min(r - step / 2.0);
        }
        assert!((fp.inscribed_radius() - oracle).abs() < 1e-3, "{} vs {}", fp.inscribed_radius(), oracle);
    }

    #[test]
    fn shared_edges_are_not_boundary() {
        // two unit squares side by side form a 2x1 rectangle; origin at the seam
        let left = ConvexPolygon::rectangle(Point2::new(-0.5, 0.0), 1.0, 1.0);
        let right = ConvexPolygon::rectangle(Point2::new(0.5, 0.0), 1.0, 1.0);
        let fp = Footprint::new(vec![left, right]).unwrap();
        assert!((fp.inscribed_radius() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn origin_outside_rejected() {
        let off = ConvexPolygon::rectangle(Point2::new(2.0, 0.0), 1.0, 1.0);
        assert!(Footprint::new(vec![off]).is_err());
        assert!(Footprint::new(vec![]).is_err());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let fp = Footprint::t_shape(3.0, 2.0, 0.75);
        let back = Footprint::from_json(&fp.to_json()).unwrap();
        assert_eq!(fp, back);
        assert!(Footprint::from_json(r#"{"polygons": [[[0,0],[1,0]]]}"#).is_err());
        assert!(Footprint::from_json(r#"{"polygons": 3}"#).is_err());
    }

    #[test]
    fn disc_monotone_in_radius() {
        let m = wall_map(10.0);
        let c = Point2::new(9.0, 8.0);
        assert!(!disc_collides(&c, 0.99, &m));
        assert!(disc_collides(&c, 1.0, &m));
        assert!(disc_collides(&c, 1.5, &m));
    }

    #[test]
    fn quarter_turn_rotation_consistency() {
        // map rotated by 90 degrees about the map center along with the pose
        let res = 0.25;
        let n = 64;
        let mut g = OccupancyGrid::new(n, n);
        let mut gr = OccupancyGrid::new(n, n);
        for y in 0..n {
            for x in 0..n {
                let occ = (x * 7 + y * 13) % 11 == 0 && x > 20;
                g.set(x, y, occ);
                // rotation (x, y) -> (n-1-y, x)
                gr.set(n - 1 - y, x, occ);
            }
        }
        let m = MultiResMap::from_grid(&g, res, Point2::default()).unwrap();
        let mr = MultiResMap::from_grid(&gr, res, Point2::default()).unwrap();
        let c = n as f64 * res / 2.0;
        let fp = Footprint::t_shape(3.0, 2.0, 0.75);
        for k in 0..200 {
            let x = 3.0 + (k as f64 * 0.37) % 10.0;
            let y = 3.0 + (k as f64 * 0.61) % 10.0;
            let th = k as f64 * 0.3;
            let p = Pose2::new(x, y, th);
            let pr = Pose2::new(c - (y - c), c + (x - c), th + PI / 2.0);
            assert_eq!(fp.collides(&p, &m), fp.collides(&pr, &mr), "pose {k}");
        }
    }

    proptest::proptest! {
        #[test]
        fn shortcuts_agree_with_exact_test(
            cells in proptest::collection::vec((0usize..48, 0usize..48), 0..30),
            x in 0.0f64..12.0, y in 0.0f64..12.0, th in -3.2f64..3.2, tee in proptest::bool::ANY,
        ) {
            let mut g = OccupancyGrid::new(48, 48);
            for (cx, cy) in cells {
                g.set(cx, cy, true);
            }
            let m = MultiResMap::from_grid(&g, 0.25, Point2::default()).unwrap();
            let fp = if tee { Footprint::t_shape(2.0, 1.2, 0.4) } else { Footprint::rectangle(3.0, 0.75) };
            let pose = Pose2::new(x, y, th);
            let exact = fp.placed(&pose).iter().any(|p| !m.region_free(p));
            proptest::prop_assert_eq!(fp.collides(&pose, &m), exact);
        }
    }
}
