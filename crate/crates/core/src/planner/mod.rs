//! Anytime lattice search over the hierarchical cost.
//!
//! Each episode is a weighted A* whose priority is `(c, t + eps * h, u)`: the
//! heuristic only inflates the time component. Episodes run with a decreasing
//! `eps` down to 1 and share a cache of evaluated edges.

pub mod fidelity;
pub mod pareto;

pub use fidelity::{cell_size_at, size_check, successors, Successor};
pub use pareto::{pareto_filter, Admission, ParetoSet};

use crate::belief::{propagate, Belief, BeliefTrajectory, NoiseModel};
use crate::collision::{edge_cost, PathCost, DEFAULT_LAMBDAS};
use crate::error::{Error, Result};
use crate::footprint::Footprint;
use crate::geometry::Pose2;
use crate::heuristics::{FshTable, H2dmrGrid, H2dmrStats, Heuristic, HeuristicFlags};
use crate::map::MultiResMap;
use crate::model::{Control, Cov3, LatticeState};
use crate::primitives::{MotionPrimitive, PrimitiveSet};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

fn default_epsilon0() -> f64 {
    1.5
}
fn default_decay() -> f64 {
    0.5
}
fn default_lambdas() -> Vec<f64> {
    DEFAULT_LAMBDAS.to_vec()
}
fn default_true() -> bool {
    true
}
fn default_fsh_radius() -> i32 {
    crate::heuristics::fsh::DEFAULT_RADIUS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    #[serde(default = "default_epsilon0")]
    pub epsilon0: f64,
    /// `eps <- max(1, eps * decay)` between episodes.
    #[serde(default = "default_decay")]
    pub epsilon_decay: f64,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_true")]
    pub graduated_fidelity: bool,
    /// Overrides the finest primitive length given to the heuristic grid.
    #[serde(default)]
    pub f_plus: Option<f64>,
    #[serde(default)]
    pub goal_heading_any: bool,
    #[serde(default = "default_true")]
    pub use_h2dmr: bool,
    #[serde(default = "default_true")]
    pub use_fsh: bool,
    #[serde(default = "default_fsh_radius")]
    pub fsh_radius: i32,
    /// Expansion budget per episode.
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            epsilon0: default_epsilon0(),
            epsilon_decay: default_decay(),
            lambdas: default_lambdas(),
            graduated_fidelity: true,
            f_plus: None,
            goal_heading_any: false,
            use_h2dmr: true,
            use_fsh: true,
            fsh_radius: default_fsh_radius(),
            max_iterations: None,
        }
    }
}

impl PlannerConfig {
    pub fn flags(&self) -> HeuristicFlags {
        HeuristicFlags { h2dmr: self.use_h2dmr, fsh: self.use_fsh }
    }

    /// The inflation factors visited, ending at 1.
    pub fn epsilon_schedule(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut e = self.epsilon0.max(1.0);
        loop {
            out.push(e);
            if e <= 1.0 {
                break;
            }
            let next = (e * self.epsilon_decay).max(1.0);
            e = if next < e { next } else { 1.0 };
        }
        out
    }
}

/// Everything a search needs; borrowed so large inputs are shared.
#[derive(Debug, Clone)]
pub struct PlanningProblem<'a> {
    pub map: &'a MultiResMap,
    pub footprint: &'a Footprint,
    pub primitives: &'a PrimitiveSet,
    pub noise: &'a NoiseModel,
    pub start: LatticeState,
    pub goal: LatticeState,
    pub sigma0: Cov3,
    pub config: PlannerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEdge {
    pub from: LatticeState,
    pub to: LatticeState,
    pub primitive: u32,
    pub cost: PathCost,
    pub poses: Vec<Pose2>,
    pub controls: Vec<[f64; 2]>,
    pub beliefs: Vec<Belief>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub epsilon: f64,
    pub iterations: usize,
    pub insertions: usize,
    /// Edge evaluations run during this episode (cache misses).
    pub evaluations: usize,
    /// Best cost known after this episode.
    pub cost: Option<PathCost>,
    /// Cost of the path this episode found itself.
    pub episode_cost: Option<PathCost>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub start: LatticeState,
    pub goal: LatticeState,
    pub start_belief: Belief,
    pub path: Vec<PathEdge>,
    pub cost: PathCost,
    /// Inflation of the episode that found this path.
    pub epsilon: f64,
    pub stats: EpisodeStats,
}

impl PlanResult {
    /// Nominal poses of the whole path, without repeating edge junctions.
    pub fn poses(&self) -> Vec<Pose2> {
        let mut out = Vec::new();
        for (i, e) in self.path.iter().enumerate() {
            let skip = usize::from(i > 0);
            out.extend_from_slice(&e.poses[skip..]);
        }
        out
    }

    pub fn controls(&self) -> Vec<Control> {
        self.path
            .iter()
            .flat_map(|e| e.controls.iter().map(|c| Control::new(c[0], c[1])))
            .collect()
    }

    pub fn beliefs(&self) -> Vec<Belief> {
        let mut out = vec![self.start_belief];
        for e in &self.path {
            out.extend_from_slice(&e.beliefs[1..]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    /// Best solution after each episode; costs are non-increasing.
    pub episodes: Vec<EpisodeStats>,
    pub best: Option<PlanResult>,
    pub heuristic: Option<H2dmrStats>,
    /// Lattice states expanded over all episodes.
    pub explored: usize,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    state: LatticeState,
    g: PathCost,
    belief: Belief,
    parent: Option<(usize, u32)>,
    alive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OpenItem {
    c: f64,
    f: f64,
    u: f64,
    seq: u64,
    node: usize,
}

impl Eq for OpenItem {}

impl Ord for OpenItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other
            .c
            .total_cmp(&self.c)
            .then(other.f.total_cmp(&self.f))
            .then(other.u.total_cmp(&self.u))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for OpenItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

type BeliefKey = [u64; 18];

fn belief_key(b: &Belief) -> BeliefKey {
    let mut k = [0u64; 18];
    for i in 0..9 {
        k[i] = b.p.as_slice()[i].to_bits();
        k[9 + i] = b.lambda.as_slice()[i].to_bits();
    }
    k
}

type EdgeKey = (LatticeState, u32, BeliefKey);

pub struct Planner<'a> {
    problem: PlanningProblem<'a>,
    heuristic: Heuristic,
    h_cache: HashMap<LatticeState, f64>,
    /// Edge results kept for later episodes; off for a single-episode schedule.
    memo: Option<HashMap<EdgeKey, Option<(PathCost, Belief)>>>,
    near_goal: f64,
    /// Total edge evaluations (cache misses).
    pub evaluations: usize,
}

impl<'a> Planner<'a> {
    /// Prepares the heuristics. A prebuilt free-space table may be passed in;
    /// otherwise it is built when enabled.
    pub fn new(problem: PlanningProblem<'a>, fsh: Option<FshTable>) -> Result<Self> {
        let set = problem.primitives;
        let lattice = set.lattice;
        let cfg = &problem.config;
        if cfg.lambdas.is_empty() || cfg.lambdas.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::Scenario("sample radii must be positive".into()));
        }
        if !(cfg.epsilon0 >= 1.0) || !(cfg.epsilon_decay > 0.0 && cfg.epsilon_decay < 1.0) {
            return Err(Error::Scenario("epsilon0 must be >= 1 and the decay in (0, 1)".into()));
        }
        let goal_pose = lattice.pose(&problem.goal);
        if problem.footprint.collides(&goal_pose, problem.map) {
            return Err(Error::GoalInCollision);
        }
        if problem.footprint.collides(&lattice.pose(&problem.start), problem.map) {
            return Err(Error::Scenario("start pose is in collision".into()));
        }
        let grid = cfg.use_h2dmr.then(|| {
            H2dmrGrid::build(
                lattice.pose(&problem.start).position(),
                goal_pose.position(),
                problem.map,
                cfg.f_plus.unwrap_or_else(|| set.f_plus()),
                problem.footprint.inscribed_radius(),
            )
        });
        let fsh = if cfg.use_fsh { Some(fsh.unwrap_or_else(|| FshTable::build(set, cfg.fsh_radius))) } else { None };
        let heuristic = Heuristic {
            lattice,
            goal: problem.goal,
            goal_heading_any: cfg.goal_heading_any,
            v_max: set.model.v_max,
            grid,
            fsh,
        };
        let near_goal = set.max_length() + lattice.resolution;
        let memo = (cfg.epsilon_schedule().len() > 1).then(HashMap::new);
        Ok(Self { problem, heuristic, h_cache: HashMap::new(), memo, near_goal, evaluations: 0 })
    }

    pub fn heuristic(&self) -> &Heuristic {
        &self.heuristic
    }

    fn h(&mut self, s: &LatticeState) -> f64 {
        if let Some(v) = self.h_cache.get(s) {
            return *v;
        }
        let v = self.heuristic.value(s, self.problem.map);
        self.h_cache.insert(*s, v);
        v
    }

    fn is_goal(&self, s: &LatticeState) -> bool {
        let g = &self.problem.goal;
        s.ix == g.ix && s.iy == g.iy && (self.problem.config.goal_heading_any || s.ith == g.ith)
    }

    fn start_belief(&self) -> Belief {
        Belief::from_pose(&self.problem.primitives.lattice.pose(&self.problem.start), self.problem.sigma0)
    }

    /// Beliefs along `prim` applied at `from` with start belief `b0`.
    pub fn trajectory(&self, from: &LatticeState, prim: &MotionPrimitive, b0: &Belief) -> Result<BeliefTrajectory> {
        let set = self.problem.primitives;
        let poses = prim.anchored_poses(&set.lattice, from);
        let controls: Vec<Control> = (0..prim.controls.len()).map(|k| prim.control(k)).collect();
        propagate(b0, &poses, &controls, &set.model, self.problem.noise)
    }

    fn evaluate(&mut self, from: &LatticeState, prim: &MotionPrimitive, b0: &Belief) -> Result<Option<(PathCost, Belief)>> {
        let key = (*from, prim.id, belief_key(b0));
        if let Some(v) = self.memo.as_ref().and_then(|m| m.get(&key)) {
            return Ok(*v);
        }
        self.evaluations += 1;
        let set = self.problem.primitives;
        let poses = prim.anchored_poses(&set.lattice, from);
        let traj = self.trajectory(from, prim, b0)?;
        let cost = edge_cost(
            &traj.beliefs,
            &poses,
            prim.duration,
            self.problem.footprint,
            self.problem.map,
            &self.problem.config.lambdas,
        )?;
        let v = cost.c.is_finite().then(|| (cost, *traj.last()));
        if let Some(m) = self.memo.as_mut() {
            m.insert(key, v);
        }
        Ok(v)
    }

    fn expand(&mut self, node: &Node) -> Result<Vec<Successor>> {
        let set = self.problem.primitives;
        let lattice = set.lattice;
        let here = lattice.pose(&node.state).position();
        let goal = lattice.pose(&self.problem.goal).position();
        let graduated = self.problem.config.graduated_fidelity && here.distance(&goal) > self.near_goal;
        let from = node.state;
        let b0 = node.belief;
        let map = self.problem.map;
        successors(&from, set, map, graduated, |p| self.evaluate(&from, p, &b0))
    }

    /// One weighted A* episode. Returns the goal node's path, if found.
    pub fn episode(&mut self, epsilon: f64) -> Result<(Option<PlanResult>, EpisodeStats)> {
        let clock = Instant::now();
        let evals_before = self.evaluations;
        let start_belief = self.start_belief();
        let mut nodes = vec![Node {
            state: self.problem.start,
            g: PathCost::new(0.0, 0.0, start_belief.uncertainty_trace()),
            belief: start_belief,
            parent: None,
            alive: true,
        }];
        let mut labels: HashMap<LatticeState, ParetoSet> = HashMap::new();
        labels.entry(self.problem.start).or_default().offer(nodes[0].g, 0);
        let mut open = BinaryHeap::new();
        let mut seq = 0u64;
        let start = self.problem.start;
        let h0 = self.h(&start);
        open.push(OpenItem { c: 0.0, f: epsilon * h0, u: nodes[0].g.u, seq, node: 0 });
        let mut stats = EpisodeStats {
            epsilon,
            iterations: 0,
            insertions: 1,
            evaluations: 0,
            cost: None,
            episode_cost: None,
            wall_ms: 0.0,
        };
        let budget = self.problem.config.max_iterations.unwrap_or(usize::MAX);
        let mut found = None;
        while let Some(item) = open.pop() {
            let node = nodes[item.node];
            if !node.alive {
                continue;
            }
            if self.is_goal(&node.state) {
                found = Some(item.node);
                break;
            }
            if stats.iterations >= budget {
                break;
            }
            stats.iterations += 1;
            for s in self.expand(&node)? {
                let g = node.g.extend(&s.cost);
                let idx = nodes.len();
                match labels.entry(s.state).or_default().offer(g, idx) {
                    Admission::Pruned => continue,
                    Admission::Kept(dead) => {
                        for d in dead {
                            nodes[d].alive = false;
                        }
                    }
                }
                nodes.push(Node { state: s.state, g, belief: s.belief, parent: Some((item.node, s.primitive)), alive: true });
                let h = self.h(&s.state);
                seq += 1;
                open.push(OpenItem { c: g.c, f: g.t + epsilon * h, u: g.u, seq, node: idx });
                stats.insertions += 1;
            }
        }
        stats.evaluations = self.evaluations - evals_before;
        let result = match found {
            Some(goal) => Some(self.reconstruct(&nodes, goal, epsilon, start_belief)?),
            None => None,
        };
        stats.episode_cost = result.as_ref().map(|r| r.cost);
        stats.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
        Ok((result, stats))
    }

    fn reconstruct(&self, nodes: &[Node], goal: usize, epsilon: f64, start_belief: Belief) -> Result<PlanResult> {
        let set = self.problem.primitives;
        let mut chain = Vec::new();
        let mut cur = goal;
        while let Some((parent, prim)) = nodes[cur].parent {
            chain.push((parent, cur, prim));
            cur = parent;
        }
        chain.reverse();
        let mut path = Vec::with_capacity(chain.len());
        for (a, b, id) in chain {
            let prim = set.primitive(id);
            let traj = self.trajectory(&nodes[a].state, prim, &nodes[a].belief)?;
            path.push(PathEdge {
                from: nodes[a].state,
                to: nodes[b].state,
                primitive: id,
                cost: PathCost::new(nodes[b].g.c - nodes[a].g.c, prim.duration, nodes[b].g.u),
                poses: prim.anchored_poses(&set.lattice, &nodes[a].state),
                controls: prim.controls.clone(),
                beliefs: traj.beliefs,
            });
        }
        Ok(PlanResult {
            start: self.problem.start,
            goal: nodes[goal].state,
            start_belief,
            path,
            cost: nodes[goal].g,
            epsilon,
            stats: EpisodeStats {
                epsilon,
                iterations: 0,
                insertions: 0,
                evaluations: 0,
                cost: Some(nodes[goal].g),
                episode_cost: Some(nodes[goal].g),
                wall_ms: 0.0,
            },
        })
    }

    /// Runs the whole inflation schedule, calling `on_episode` after each
    /// episode with the best result so far.
    pub fn run<F: FnMut(&EpisodeStats, Option<&PlanResult>)>(&mut self, mut on_episode: F) -> Result<PlanOutcome> {
        let mut best: Option<PlanResult> = None;
        let mut episodes = Vec::new();
        let mut explored = 0;
        for eps in self.problem.config.epsilon_schedule() {
            let (res, mut stats) = self.episode(eps)?;
            explored += stats.iterations;
            if let Some(mut r) = res {
                if best.as_ref().is_none_or(|b| r.cost < b.cost) {
                    r.stats = stats;
                    best = Some(r);
                }
            }
            stats.cost = best.as_ref().map(|b| b.cost);
            if let Some(b) = best.as_mut() {
                b.stats.cost = stats.cost;
            }
            on_episode(&stats, best.as_ref());
            episodes.push(stats);
        }
        Ok(PlanOutcome { episodes, best, heuristic: self.heuristic.grid.as_ref().map(|g| g.stats), explored })
    }
}

/// Plans with the configured schedule.
pub fn plan(problem: PlanningProblem<'_>, fsh: Option<FshTable>) -> Result<PlanOutcome> {
    Planner::new(problem, fsh)?.run(|_, _| {})
}
