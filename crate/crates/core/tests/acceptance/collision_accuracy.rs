//! Sigma-sample collision probability of a 3.0 x 0.75 m rectangle at heading 0
//! next to a wall running at 45 degrees, with unit covariance, against plain
//! Monte Carlo on the exact half-plane. Distances are from the rectangle's
//! centre to the wall.

use crate::Verdict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use safelat_core::collision::{gamma_probability_baseline, waypoint_collision_probability, DEFAULT_LAMBDAS};
use safelat_core::{Belief, Cov3, Footprint, MultiResMap, OccupancyGrid, Point2, State3};

const RES: f64 = 0.025;
const SIDE: usize = 1200;
/// The wall is the half-plane `x + y >= WALL`.
const WALL: f64 = 34.0;
const LENGTH: f64 = 3.0;
const WIDTH: f64 = 0.75;
const MC_SAMPLES: usize = 1_000_000;

fn wall_map() -> MultiResMap {
    let mut g = OccupancyGrid::new(SIDE, SIDE);
    for y in 0..SIDE {
        for x in 0..SIDE {
            let (cx, cy) = ((x as f64 + 0.5) * RES, (y as f64 + 0.5) * RES);
            g.set(x, y, cx + cy >= WALL);
        }
    }
    MultiResMap::from_grid(&g, RES, Point2::new(0.0, 0.0)).unwrap()
}

/// Mean pose whose centre is `d` from the wall.
fn mean_at(d: f64) -> State3 {
    let c = (WALL - d * 2f64.sqrt()) / 2.0;
    State3::new(c, c, 0.0)
}

/// Does the rectangle at `(x, y, th)` reach the half-plane?
fn hits_wall(x: f64, y: f64, th: f64) -> bool {
    let (s, c) = th.sin_cos();
    let (hl, hw) = (LENGTH / 2.0, WIDTH / 2.0);
    [(hl, hw), (hl, -hw), (-hl, hw), (-hl, -hw)]
        .iter()
        .any(|&(bx, by)| (x + c * bx - s * by) + (y + s * bx + c * by) >= WALL)
}

fn monte_carlo(mean: &State3, rng: &mut ChaCha8Rng) -> f64 {
    let mut hits = 0usize;
    for _ in 0..MC_SAMPLES {
        let dx: f64 = StandardNormal.sample(rng);
        let dy: f64 = StandardNormal.sample(rng);
        let dt: f64 = StandardNormal.sample(rng);
        hits += usize::from(hits_wall(mean[0] + dx, mean[1] + dy, mean[2] + dt));
    }
    hits as f64 / MC_SAMPLES as f64
}

pub fn run() -> Verdict {
    let map = wall_map();
    let fp = Footprint::rectangle(LENGTH, WIDTH);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut abs_err = Vec::new();
    let (mut worst_sigma, mut worst_gamma) = (0.0f64, 0.0f64);
    let mut rows = Vec::new();
    for i in 0..=50 {
        let d = 0.5 + 0.05 * i as f64;
        let mean = mean_at(d);
        let belief = Belief::new(mean, Cov3::identity());
        let truth = monte_carlo(&mean, &mut rng);
        let est = waypoint_collision_probability(&belief, &fp, &map, &DEFAULT_LAMBDAS).unwrap();
        let gamma = gamma_probability_baseline(&belief, fp.bounding_radius(), &map);
        abs_err.push((est - truth).abs());
        if (0.75 - 1e-9..=1.0 + 1e-9).contains(&d) {
            worst_sigma = worst_sigma.max((est - truth).abs());
            worst_gamma = worst_gamma.max((gamma - truth).abs());
        }
        rows.push(format!("{d:.2}:{truth:.3}/{est:.3}/{gamma:.3}"));
    }
    if std::env::var_os("SAFELAT_VERBOSE").is_some() {
        eprintln!("distance:mc/sigma/gamma {}", rows.join(" "));
    }
    let mae = abs_err.iter().sum::<f64>() / abs_err.len() as f64;
    let ratio = worst_gamma / worst_sigma.max(1e-12);
    Verdict {
        pass: mae <= 0.03 && ratio >= 5.0,
        detail: format!(
            "mean abs error {:.2} pp (limit 3); worst error on [0.75, 1.0] m: sigma {:.2} pp, gamma {:.2} pp, ratio {:.1} (limit 5)",
            mae * 100.0,
            worst_sigma * 100.0,
            worst_gamma * 100.0,
            ratio
        ),
    }
}
