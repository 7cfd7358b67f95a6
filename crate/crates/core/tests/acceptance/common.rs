//! Shared fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safelat_core::collision::edge_cost;
use safelat_core::heuristics::FshTable;
use safelat_core::planner::{PlanOutcome, Planner, PlanningProblem};
use safelat_core::primitives::build_control_set;
use safelat_core::{
    Belief, Cov3, Footprint, LatticeSpec, LatticeState, LoadedScenario, MultiResMap, NoiseModel, OccupancyGrid,
    PathCost, PlannerConfig, Point2, PrimitiveSet, RobotModel, Scenario,
};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

pub fn corridor() -> &'static LoadedScenario {
    static CELL: OnceLock<LoadedScenario> = OnceLock::new();
    CELL.get_or_init(|| Scenario::load_file(&scenario_path("corridor.json")).expect("corridor scenario loads"))
}

pub struct Timed {
    pub outcome: PlanOutcome,
    pub elapsed: Duration,
}

/// Plans the corridor with the given fidelity and initial inflation.
pub fn plan_corridor(graduated: bool, epsilon0: f64) -> Timed {
    let sc = corridor();
    let mut problem = sc.problem();
    problem.config.graduated_fidelity = graduated;
    problem.config.epsilon0 = epsilon0;
    let clock = Instant::now();
    let outcome = Planner::new(problem, None).and_then(|mut p| p.run(|_, _| {})).expect("corridor plans");
    Timed { outcome, elapsed: clock.elapsed() }
}

/// The graduated-fidelity plan at epsilon 1, computed once.
pub fn corridor_reference() -> &'static Timed {
    static CELL: OnceLock<Timed> = OnceLock::new();
    CELL.get_or_init(|| plan_corridor(true, 1.0))
}

/// Small noise-free instance: every belief is the zero covariance, so an edge
/// costs the same whichever path reaches its start.
pub struct SmallInstance {
    pub map: MultiResMap,
    pub footprint: Footprint,
    pub noise: NoiseModel,
    pub start: LatticeState,
    pub goal: LatticeState,
}

/// Lattice indices run over `0..SMALL_SIDE` on both axes.
pub const SMALL_SIDE: i32 = 15;

pub fn small_primitives() -> &'static (PrimitiveSet, FshTable) {
    static CELL: OnceLock<(PrimitiveSet, FshTable)> = OnceLock::new();
    CELL.get_or_init(|| {
        let model = RobotModel::unicycle(1.0, 1.0, 0.125);
        let lattice = LatticeSpec { resolution: 0.5, headings: 8 };
        let set = build_control_set(&model, &lattice, &[0.5, 1.0]).expect("primitives build");
        let fsh = FshTable::build(&set, 10);
        (set, fsh)
    })
}

/// Random boxes on a 7 x 7 m map whose extent holds exactly 15 x 15 lattice
/// positions; start and goal are random collision-free states.
pub fn small_instance(seed: u64) -> SmallInstance {
    let (set, _) = small_primitives();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell = 7.0 / 64.0;
    let mut g = OccupancyGrid::new(64, 64);
    for _ in 0..rng.random_range(3..=7) {
        let (x, y) = (rng.random_range(0.0..7.0), rng.random_range(0.0..7.0));
        let (w, h) = (rng.random_range(0.4..2.0), rng.random_range(0.4..2.0));
        g.fill_box(cell, Point2::new(x, y), Point2::new(x + w, y + h));
    }
    let map = MultiResMap::from_grid(&g, cell, Point2::new(0.0, 0.0)).expect("map builds");
    let footprint = Footprint::rectangle(0.6, 0.4);
    let heads = set.lattice.headings;
    let free_state = |rng: &mut ChaCha8Rng| loop {
        let s = LatticeState::new(
            rng.random_range(0..SMALL_SIDE),
            rng.random_range(0..SMALL_SIDE),
            rng.random_range(0..heads),
        );
        if !footprint.collides(&set.lattice.pose(&s), &map) {
            return s;
        }
    };
    let start = free_state(&mut rng);
    let goal = loop {
        let s = free_state(&mut rng);
        if s != start {
            break s;
        }
    };
    SmallInstance { map, footprint, noise: NoiseModel::open_loop(Cov3::zeros()), start, goal }
}

impl SmallInstance {
    pub fn problem(&self) -> PlanningProblem<'_> {
        let (set, _) = small_primitives();
        PlanningProblem {
            map: &self.map,
            footprint: &self.footprint,
            primitives: set,
            noise: &self.noise,
            start: self.start,
            goal: self.goal,
            sigma0: Cov3::zeros(),
            config: PlannerConfig { graduated_fidelity: false, epsilon0: 1.0, ..PlannerConfig::default() },
        }
    }

    pub fn planner(&self) -> Planner<'_> {
        Planner::new(self.problem(), Some(small_primitives().1.clone())).expect("planner builds")
    }

    /// Every finite-cost edge between in-range states, costed exactly as the
    /// planner costs them.
    pub fn edges(&self, planner: &Planner<'_>) -> Vec<(LatticeState, LatticeState, PathCost)> {
        let (set, _) = small_primitives();
        let lambdas = PlannerConfig::default().lambdas;
        let mut out = Vec::new();
        for ix in 0..SMALL_SIDE {
            for iy in 0..SMALL_SIDE {
                for ith in 0..set.lattice.headings {
                    let s = LatticeState::new(ix, iy, ith);
                    if self.footprint.collides(&set.lattice.pose(&s), &self.map) {
                        continue;
                    }
                    let b0 = Belief::from_pose(&set.lattice.pose(&s), Cov3::zeros());
                    for p in set.from_heading(ith) {
                        let traj = planner.trajectory(&s, p, &b0).expect("propagates");
                        let poses = p.anchored_poses(&set.lattice, &s);
                        let cost = edge_cost(&traj.beliefs, &poses, p.duration, &self.footprint, &self.map, &lambdas)
                            .expect("costs");
                        if cost.c.is_finite() {
                            out.push((s, p.apply(&s), cost));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Lexicographic Dijkstra from `source` over `(from, to, cost)` edges.
pub fn dijkstra(
    edges: &[(LatticeState, LatticeState, PathCost)],
    source: LatticeState,
) -> HashMap<LatticeState, PathCost> {
    let mut adj: HashMap<LatticeState, Vec<(LatticeState, PathCost)>> = HashMap::new();
    for (a, b, c) in edges {
        adj.entry(*a).or_default().push((*b, *c));
    }
    let mut dist = HashMap::from([(source, PathCost::new(0.0, 0.0, 0.0))]);
    let mut heap = BinaryHeap::from([Reverse((PathCost::new(0.0, 0.0, 0.0), source))]);
    while let Some(Reverse((d, s))) = heap.pop() {
        if dist.get(&s).is_some_and(|best| *best < d) {
            continue;
        }
        for (t, c) in adj.get(&s).map_or(&[][..], |v| v.as_slice()) {
            let nd = d.extend(c);
            if dist.get(t).is_none_or(|best| nd < *best) {
                dist.insert(*t, nd);
                heap.push(Reverse((nd, *t)));
            }
        }
    }
    dist
}
