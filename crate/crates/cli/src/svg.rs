//! Plot output. World coordinates are in meters with y up; the drawing group
//! flips y so the file can use them unchanged.

use nalgebra::{Matrix2, SymmetricEigen};
use safelat_core::{Aabb, Belief, Footprint, MultiResMap, PlanResult, Pose2};
use std::fmt::Write;

fn n(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Semi-axes and rotation (degrees) of the 3-sigma positional ellipse.
pub fn ellipse_3sigma(b: &Belief) -> (f64, f64, f64) {
    let s = b.sigma();
    let m = Matrix2::new(s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]);
    let eig = SymmetricEigen::new(m);
    let (i, j) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let major = eig.eigenvectors.column(i);
    let angle = major[1].atan2(major[0]).to_degrees();
    (3.0 * eig.eigenvalues[i].max(0.0).sqrt(), 3.0 * eig.eigenvalues[j].max(0.0).sqrt(), angle)
}

pub struct Plot<'a> {
    pub map: &'a MultiResMap,
    pub footprint: &'a Footprint,
    pub denied: &'a [Aabb],
    pub plan: Option<&'a PlanResult>,
}

impl Plot<'_> {
    pub fn render(&self) -> String {
        let b = self.map.bounds();
        let (w, h) = (b.max.x - b.min.x, b.max.y - b.min.y);
        let stroke = w.max(h) / 800.0;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="{}">"#,
            n(b.min.x),
            n(-b.max.y),
            n(w),
            n(h),
            n(800.0 * h / w)
        );
        let _ = writeln!(s, r#"<g transform="scale(1,-1)" stroke-width="{}">"#, n(stroke));
        let _ = writeln!(s, r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#ffffff"/>"##, n(b.min.x), n(b.min.y), n(w), n(h));
        for leaf in self.map.leaves() {
            let r = leaf.bounds();
            let fill = if leaf.occupied { "#404040" } else { "none" };
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="#d0d0d0"/>"##,
                n(r.min.x),
                n(r.min.y),
                n(leaf.size),
                n(leaf.size)
            );
        }
        for d in self.denied {
            let _ = writeln!(
                s,
                r##"<rect class="denied" x="{}" y="{}" width="{}" height="{}" fill="#ff9900" fill-opacity="0.3" stroke="none"/>"##,
                n(d.min.x),
                n(d.min.y),
                n(d.max.x - d.min.x),
                n(d.max.y - d.min.y)
            );
        }
        if let Some(plan) = self.plan {
            self.path(&mut s, plan);
        }
        s.push_str("</g>\n</svg>\n");
        s
    }

    fn path(&self, s: &mut String, plan: &PlanResult) {
        let pts: Vec<String> = plan.poses().iter().map(|p| format!("{},{}", n(p.x), n(p.y))).collect();
        let _ = writeln!(s, r##"<polyline class="path" points="{}" fill="none" stroke="#0055cc"/>"##, pts.join(" "));
        let mut marks: Vec<(Pose2, Belief)> = vec![(pose_of(&plan.start_belief), plan.start_belief)];
        for e in &plan.path {
            if let (Some(p), Some(b)) = (e.poses.last(), e.beliefs.last()) {
                marks.push((*p, *b));
            }
        }
        for (pose, belief) in &marks {
            for poly in self.footprint.placed(pose) {
                let v: Vec<String> = poly.vertices().iter().map(|p| format!("{},{}", n(p.x), n(p.y))).collect();
                let _ = writeln!(s, r##"<polygon class="footprint" points="{}" fill="none" stroke="#00994d"/>"##, v.join(" "));
            }
            let (rx, ry, deg) = ellipse_3sigma(belief);
            let _ = writeln!(
                s,
                r##"<ellipse class="sigma3" cx="{}" cy="{}" rx="{}" ry="{}" transform="rotate({} {} {})" fill="none" stroke="#cc0000"/>"##,
                n(pose.x),
                n(pose.y),
                n(rx),
                n(ry),
                n(deg),
                n(pose.x),
                n(pose.y)
            );
        }
    }
}

fn pose_of(b: &Belief) -> Pose2 {
    Pose2::new(b.mean[0], b.mean[1], b.mean[2])
}
