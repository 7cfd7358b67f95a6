//! Collision probability by deterministic sampling of the predicted state
//! distribution, and the hierarchical path cost.

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::footprint::Footprint;
use crate::geometry::{Point2, Pose2};
use crate::map::MultiResMap;
use crate::model::{Cov3, State3};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::f64::consts::PI;

pub const DEFAULT_LAMBDAS: [f64; 2] = [1.0, 2.0];
const MAX_PROBABILITY: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSampleSet {
    pub samples: Vec<State3>,
    /// Density of each sample under the (possibly degenerate) Gaussian.
    pub weights: Vec<f64>,
}

/// Symmetric square root and pseudo-inverse data of a PSD matrix.
struct Factor {
    root: Cov3,
    /// Projector onto the range of the covariance.
    range: Cov3,
    rank: usize,
    pseudo_det: f64,
}

fn factor(cov: &Cov3) -> Result<Factor> {
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let scale = eig.eigenvalues.abs().max().max(1e-300);
    let mut root = Cov3::zeros();
    let mut range = Cov3::zeros();
    let mut rank = 0;
    let mut pseudo_det = 1.0;
    for i in 0..3 {
        let ev = eig.eigenvalues[i];
        if ev < -1e-9 * scale.max(1.0) {
            return Err(Error::NotPsd(ev));
        }
        let v = eig.eigenvectors.column(i);
        let outer = v * v.transpose();
        if ev > 1e-12 * scale {
            root += outer * ev.sqrt();
            range += outer;
            rank += 1;
            pseudo_det *= ev;
        }
    }
    Ok(Factor { root, range, rank, pseudo_det })
}

/// Axis and cross-axis samples at every ring radius in `lambdas`, plus the mean.
///
/// A sample `mean + S a`, with `S` the symmetric square root, gets the density
/// `exp(-a' P a / 2) / sqrt((2 pi)^r pdet)`, where `P` projects onto the range
/// of the covariance. A zero covariance yields the mean alone with weight 1.
pub fn sigma_samples(mean: &State3, cov: &Cov3, lambdas: &[f64]) -> Result<SigmaSampleSet> {
    let f = factor(cov)?;
    if f.rank == 0 {
        return Ok(SigmaSampleSet { samples: vec![*mean], weights: vec![1.0] });
    }
    let norm = 1.0 / ((2.0 * PI).powi(f.rank as i32) * f.pseudo_det).sqrt();
    let full = f.rank == 3;
    // consecutive samples mostly share their quadratic form, so the last
    // density is reused when it repeats
    let mut last = (f64::NAN, 0.0);
    let mut weight = |a: &State3| {
        // full rank: the projector is the identity
        let q = if full { a.norm_squared() } else { (a.transpose() * f.range * a)[(0, 0)] };
        if q != last.0 {
            last = (q, norm * (-0.5 * q).exp());
        }
        last.1
    };
    let n = 3;
    let count = 1 + lambdas.len() * (2 * n + 2 * n * (n - 1));
    let mut samples = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    samples.push(*mean);
    weights.push(norm);
    let mut push = |a: State3| {
        samples.push(mean + f.root * a);
        weights.push(weight(&a));
    };
    for &lambda in lambdas {
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut a = State3::zeros();
                a[i] = sign * lambda;
                push(a);
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut a = State3::zeros();
                    a[i] = si * lambda;
                    a[j] = sj * lambda;
                    push(a);
                }
            }
        }
    }
    Ok(SigmaSampleSet { samples, weights })
}

fn pose_of(x: &State3) -> Pose2 {
    Pose2::new(x[0], x[1], x[2])
}

/// Weighted fraction of samples whose footprint pose collides.
pub fn waypoint_collision_probability(
    belief: &Belief,
    fp: &Footprint,
    map: &MultiResMap,
    lambdas: &[f64],
) -> Result<f64> {
    let sigma = belief.sigma();
    let center = Point2::new(belief.mean[0], belief.mean[1]);
    // |(S a)_xy| <= |a| sqrt(tr Sigma_xy) and |a| <= sqrt(2) max(lambda): a
    // clear disc of that radius settles the common case without factoring
    let ring = lambdas.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let loose = ring * std::f64::consts::SQRT_2 * (sigma[(0, 0)] + sigma[(1, 1)]).max(0.0).sqrt();
    if loose.is_finite() && !map.disc_collides(&center, fp.bounding_radius() + loose) {
        return Ok(0.0);
    }
    let set = sigma_samples(&belief.mean, &sigma, lambdas)?;
    // every sample lies within this disc of the mean
    let reach = set
        .samples
        .iter()
        .map(|s| ((s[0] - belief.mean[0]).powi(2) + (s[1] - belief.mean[1]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    if !map.disc_collides(&center, fp.bounding_radius() + reach) {
        return Ok(0.0);
    }
    let mut wc = 0.0;
    let mut wt = 0.0;
    for (s, w) in set.samples.iter().zip(&set.weights) {
        wt += w;
        if fp.collides(&pose_of(s), map) {
            wc += w;
        }
    }
    Ok((wc / wt).clamp(0.0, 1.0))
}

/// `-log(1 - p)` with `p` clamped below 1; exactly `p == 1` gives infinity.
pub fn survival_cost(p: f64) -> f64 {
    if p >= 1.0 {
        f64::INFINITY
    } else if p <= 0.0 {
        0.0
    } else {
        -(1.0 - p.min(MAX_PROBABILITY)).ln()
    }
}

/// Indices of the poses evaluated for collision along a primitive: every pose
/// after the first, thinned so that consecutive evaluated poses are at least
/// `spacing` apart in swept distance. The swept distance of a step counts its
/// translation plus the arc traced by the footprint's farthest point, so
/// in-place rotations are sampled too. The last pose is always evaluated.
pub fn waypoint_indices(poses: &[Pose2], spacing: f64, sweep_radius: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    for k in 1..poses.len() {
        let a = &poses[k - 1];
        let b = &poses[k];
        acc += (b.x - a.x).hypot(b.y - a.y) + sweep_radius * (b.theta - a.theta).abs();
        if acc >= spacing - 1e-12 || k + 1 == poses.len() {
            out.push(k);
            acc = 0.0;
        }
    }
    out
}

/// Collision cost of an edge: the sum of `-log(1 - p)` over the evaluated
/// waypoints. `beliefs` must be aligned with `poses`.
pub fn collision_cost(
    beliefs: &[Belief],
    poses: &[Pose2],
    fp: &Footprint,
    map: &MultiResMap,
    lambdas: &[f64],
) -> Result<f64> {
    if beliefs.len() != poses.len() {
        return Err(Error::Misaligned { beliefs: beliefs.len(), poses: poses.len() });
    }
    let mut c = 0.0;
    for k in waypoint_indices(poses, map.max_resolution() / 2.0, fp.bounding_radius()) {
        c += survival_cost(waypoint_collision_probability(&beliefs[k], fp, map, lambdas)?);
        if c.is_infinite() {
            break;
        }
    }
    Ok(c)
}

/// Full edge cost: collision cost, primitive duration, trace of the final covariance.
pub fn edge_cost(
    beliefs: &[Belief],
    poses: &[Pose2],
    duration: f64,
    fp: &Footprint,
    map: &MultiResMap,
    lambdas: &[f64],
) -> Result<PathCost> {
    let c = collision_cost(beliefs, poses, fp, map, lambdas)?;
    let u = beliefs.last().map_or(0.0, |b| b.uncertainty_trace());
    Ok(PathCost { c, t: duration, u })
}

/// Bounding-circle collision probability from the positional marginal: the
/// chi-square tail at the Mahalanobis distance of the nearest obstacle point,
/// measured along the direction to that point. Returns 1 when the mean's
/// bounding circle already touches an obstacle.
pub fn gamma_probability_baseline(belief: &Belief, bounding_radius: f64, map: &MultiResMap) -> f64 {
    let p = Point2::new(belief.mean[0], belief.mean[1]);
    let clearance = map.clearance(&p);
    if !clearance.is_finite() {
        return 0.0;
    }
    let gap = clearance - bounding_radius;
    if gap <= 0.0 {
        return 1.0;
    }
    let Some(dir) = nearest_obstacle_direction(map, &p, clearance) else {
        return 0.0;
    };
    let s = belief.sigma();
    let var = dir.x * dir.x * s[(0, 0)] + 2.0 * dir.x * dir.y * s[(0, 1)] + dir.y * dir.y * s[(1, 1)];
    if var <= 0.0 {
        return 0.0;
    }
    let m2 = gap * gap / var;
    // survival function of a chi-square with two degrees of freedom
    (-m2 / 2.0).exp()
}

fn nearest_obstacle_direction(map: &MultiResMap, p: &Point2, clearance: f64) -> Option<Point2> {
    let b = map.bounds();
    let r = clearance + map.max_resolution();
    let search = crate::geometry::Aabb::new(Point2::new(p.x - r, p.y - r), Point2::new(p.x + r, p.y + r));
    let mut best: Option<(f64, Point2)> = None;
    for cell in map.occupied_in_box(&search) {
        let q = cell.bounds().closest_point(p);
        let d = q.distance(p);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, q));
        }
    }
    // the map border counts as an obstacle
    for q in [
        Point2::new(b.min.x, p.y),
        Point2::new(b.max.x, p.y),
        Point2::new(p.x, b.min.y),
        Point2::new(p.x, b.max.y),
    ] {
        let d = q.distance(p);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, q));
        }
    }
    let (d, q) = best?;
    (d > 0.0).then(|| Point2::new((q.x - p.x) / d, (q.y - p.y) / d))
}

/// Hierarchical path cost: collision cost, then time, then uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PathCost {
    pub c: f64,
    pub t: f64,
    /// Trace of the covariance at the end of the path.
    #[serde(rename = "trace")]
    pub u: f64,
}

impl PathCost {
    pub const fn new(c: f64, t: f64, u: f64) -> Self {
        Self { c, t, u }
    }

    /// Appends an edge: risk and time add up, the trace is replaced.
    pub fn extend(&self, edge: &PathCost) -> PathCost {
        PathCost { c: self.c + edge.c, t: self.t + edge.t, u: edge.u }
    }

    pub fn lex_cmp(&self, other: &PathCost) -> Ordering {
        self.c
            .total_cmp(&other.c)
            .then(self.t.total_cmp(&other.t))
            .then(self.u.total_cmp(&other.u))
    }

    /// Componentwise `<=`.
    pub fn dominates(&self, other: &PathCost) -> bool {
        self.c <= other.c && self.t <= other.t && self.u <= other.u
    }
}

impl Eq for PathCost {}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lex_cmp(other)
    }
}
