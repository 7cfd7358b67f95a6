use crate::output::{json_lines, json_pretty, write_atomic};
use crate::svg::Plot;
use crate::{BenchArgs, MapInfoArgs, ModelArg, Overrides, PlanArgs, PrimgenArgs, SimulateArgs};
use anyhow::{anyhow, bail, Context, Result};
use safelat_core::heuristics::fsh::FshTable;
use safelat_core::heuristics::H2dmrGrid;
use safelat_core::planner::{PathEdge, PlanOutcome, Planner};
use safelat_core::scenario::{MapSpec, PrimitiveSpec};
use safelat_core::sim::{batch, ExecutionPlan};
use safelat_core::primitives::build_control_set;
use safelat_core::{
    LatticeSpec, LatticeState, LoadedScenario, MultiResMap, OccupancyGrid, PathCost, Point2, RobotModel, Scenario,
};
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

pub const EXIT_OK: u8 = 0;
pub const EXIT_NO_PATH: u8 = 2;

fn read_scenario(path: &Path, occ_threshold: Option<f64>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut s = Scenario::from_json(&text).with_context(|| format!("{}", path.display()))?;
    if let Some(t) = occ_threshold {
        match &mut s.map {
            MapSpec::Pgm { occ_threshold, .. } => *occ_threshold = t,
            MapSpec::Boxes { .. } => bail!("--occ-threshold applies only to PGM maps"),
        }
    }
    Ok(s)
}

fn resolve(path: &Path, s: Scenario) -> Result<LoadedScenario> {
    let base = path.parent().unwrap_or(Path::new("."));
    s.resolve(base).with_context(|| format!("{}", path.display()))
}

pub fn load(path: &Path, o: &Overrides) -> Result<LoadedScenario> {
    let mut s = read_scenario(path, o.occ_threshold)?;
    let c = &mut s.planner;
    c.use_fsh &= !o.no_fsh;
    c.use_h2dmr &= !o.no_h2dmr;
    c.graduated_fidelity &= !o.no_gf;
    if let Some(e) = o.epsilon0 {
        c.epsilon0 = e;
    }
    if let Some(d) = o.epsilon_decay {
        c.epsilon_decay = d;
    }
    if let Some(l) = &o.lambdas {
        c.lambdas = l.clone();
    }
    if o.max_iterations.is_some() {
        c.max_iterations = o.max_iterations;
    }
    resolve(path, s)
}

pub fn run_planner(sc: &LoadedScenario, o: &Overrides) -> Result<PlanOutcome> {
    let cfg = &sc.scenario.planner;
    let fsh = if cfg.use_fsh {
        Some(FshTable::load_or_build(&sc.primitives, cfg.fsh_radius, o.cache_dir.as_deref())?)
    } else {
        None
    };
    let mut planner = Planner::new(sc.problem(), fsh)?;
    Ok(planner.run(|_, _| {})?)
}

/// Deterministic part of a plan; timings go to the stats file.
#[derive(Serialize)]
struct PathFile<'a> {
    start: LatticeState,
    goal: LatticeState,
    cost: PathCost,
    epsilon: f64,
    edges: &'a [PathEdge],
}

pub fn plan(a: &PlanArgs) -> Result<u8> {
    let sc = load(&a.scenario, &a.overrides)?;
    let outcome = run_planner(&sc, &a.overrides)?;
    write_atomic(&a.out.join("stats.jsonl"), &json_lines(&outcome.episodes)?)?;
    let plot = Plot { map: &sc.map, footprint: &sc.footprint, denied: &sc.noise.denied, plan: outcome.best.as_ref() };
    write_atomic(&a.out.join("plan.svg"), plot.render().as_bytes())?;
    for e in &outcome.episodes {
        println!(
            "eps {:.3}: {} iterations, {} insertions, cost {}",
            e.epsilon,
            e.iterations,
            e.insertions,
            e.cost.map_or("none".into(), |c| format!("c {:.6} t {:.3} u {:.6}", c.c, c.t, c.u))
        );
    }
    let Some(best) = outcome.best else {
        eprintln!("no path found");
        return Ok(EXIT_NO_PATH);
    };
    let file = PathFile { start: best.start, goal: best.goal, cost: best.cost, epsilon: best.epsilon, edges: &best.path };
    write_atomic(&a.out.join("path.json"), &json_pretty(&file)?)?;
    println!("{} edges written to {}", best.path.len(), a.out.display());
    Ok(EXIT_OK)
}

pub fn simulate(a: &SimulateArgs) -> Result<u8> {
    let sc = load(&a.scenario, &a.overrides)?;
    let outcome = run_planner(&sc, &a.overrides)?;
    let Some(best) = outcome.best else {
        eprintln!("no path found");
        return Ok(EXIT_NO_PATH);
    };
    let exec = ExecutionPlan::from_plan(&best, &sc.primitives.model, &sc.noise)?;
    let mut traces = Vec::new();
    let summary = batch(&exec, &sc.primitives.model, &sc.footprint, &sc.map, a.runs, a.seed, |t| {
        serde_json::to_writer(&mut traces, t).expect("trace serializes");
        traces.push(b'\n');
    });
    write_atomic(&a.out.join("traces.jsonl"), &traces)?;
    write_atomic(&a.out.join("summary.json"), &json_pretty(&summary)?)?;
    println!(
        "{} runs, {} collisions, rate {}, mean max deviation {}",
        summary.runs,
        summary.collisions,
        summary.collision_rate.map_or("n/a".into(), |r| format!("{r:.4}")),
        summary.mean_max_deviation.map_or("n/a".into(), |d| format!("{d:.4} m"))
    );
    Ok(EXIT_OK)
}

pub fn primgen(a: &PrimgenArgs) -> Result<u8> {
    let (model, lattice, lengths) = match &a.scenario {
        Some(p) => match read_scenario(p, None)?.primitives {
            PrimitiveSpec::Generate { model, lattice, lengths } => (model, lattice, lengths),
            PrimitiveSpec::File { .. } => bail!("{} already references a primitive file", p.display()),
        },
        None => {
            let model = match a.model {
                ModelArg::Unicycle => RobotModel::unicycle(a.v_max, a.omega_max, a.dt),
                ModelArg::Ackermann => RobotModel::ackermann(a.v_max, a.omega_max, a.min_turn_radius, a.dt),
            };
            (model, LatticeSpec { resolution: a.resolution, headings: a.headings }, a.lengths.clone())
        }
    };
    let set = build_control_set(&model, &lattice, &lengths)?;
    write_atomic(&a.out, set.to_json().as_bytes())?;
    println!("{} primitives in {} groups written to {}", set.primitives().len(), set.groups().len(), a.out.display());
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub c_plus: f64,
    pub h2d_iterations: usize,
    pub h2dmr_iterations: usize,
    pub iteration_gain_pct: f64,
    pub h2d_ms: f64,
    pub h2dmr_ms: f64,
    pub time_gain_pct: f64,
}

fn point(v: &Option<Vec<f64>>, default: Point2) -> Point2 {
    v.as_ref().map_or(default, |v| Point2::new(v[0], v[1]))
}

pub fn bench_heuristic(a: &BenchArgs) -> Result<u8> {
    let (grid, cell, origin, start, goal, radius, f_plus) = match &a.scenario {
        Some(p) => {
            let sc = resolve(p, read_scenario(p, None)?)?;
            let lat = sc.primitives.lattice;
            (
                sc.map.decompose(),
                sc.map.max_resolution(),
                sc.map.origin(),
                point(&a.start, lat.pose(&sc.scenario.start).position()),
                point(&a.goal, lat.pose(&sc.scenario.goal).position()),
                a.radius.unwrap_or(sc.footprint.inscribed_radius()),
                a.f_plus.unwrap_or(sc.primitives.f_plus()),
            )
        }
        None => {
            if !(a.cell > 0.0) || !(a.empty >= a.cell) {
                bail!("empty map needs 0 < cell <= side");
            }
            let side = (a.empty / a.cell).round() as usize;
            let m = 0.04 * a.empty;
            (
                OccupancyGrid::new(side, side),
                a.cell,
                Point2::new(0.0, 0.0),
                point(&a.start, Point2::new(m, m)),
                point(&a.goal, Point2::new(a.empty - m, a.empty - m)),
                a.radius.unwrap_or(0.3),
                a.f_plus.unwrap_or(0.5),
            )
        }
    };
    let mut rows = Vec::new();
    for &cap in &a.caps {
        let map = MultiResMap::from_grid_capped(&grid, cell, origin, cap)?;
        let t = Instant::now();
        let sr = H2dmrGrid::build_uniform(start, goal, &map, f_plus, radius);
        let h2d_ms = t.elapsed().as_secs_f64() * 1e3;
        let t = Instant::now();
        let mr = H2dmrGrid::build(start, goal, &map, f_plus, radius);
        let h2dmr_ms = t.elapsed().as_secs_f64() * 1e3;
        rows.push(BenchRow {
            c_plus: cap,
            h2d_iterations: sr.stats.iterations,
            h2dmr_iterations: mr.stats.iterations,
            iteration_gain_pct: gain(sr.stats.iterations as f64, mr.stats.iterations as f64),
            h2d_ms,
            h2dmr_ms,
            time_gain_pct: gain(h2d_ms, h2dmr_ms),
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    match &a.out {
        Some(p) => write_atomic(p, &bytes)?,
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    Ok(EXIT_OK)
}

fn gain(base: f64, new: f64) -> f64 {
    if base > 0.0 { 100.0 * (1.0 - new / base) } else { 0.0 }
}

#[derive(Serialize)]
struct MapInfo {
    origin: [f64; 2],
    max_resolution: f64,
    side_cells: u32,
    extent: f64,
    leaves: usize,
    occupied_leaves: usize,
    occupied_area: f64,
    /// (leaf size, count), smallest first.
    leaf_sizes: Vec<(f64, usize)>,
}

pub fn map_info(a: &MapInfoArgs) -> Result<u8> {
    let sc = resolve(&a.scenario, read_scenario(&a.scenario, a.occ_threshold)?)?;
    let m = &sc.map;
    let mut sizes: Vec<(f64, usize)> = Vec::new();
    for leaf in m.leaves() {
        match sizes.iter_mut().find(|(s, _)| *s == leaf.size) {
            Some((_, c)) => *c += 1,
            None => sizes.push((leaf.size, 1)),
        }
    }
    sizes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let info = MapInfo {
        origin: [m.origin().x, m.origin().y],
        max_resolution: m.max_resolution(),
        side_cells: m.side_cells(),
        extent: m.root_extent(),
        leaves: m.leaf_count(),
        occupied_leaves: m.leaves().iter().filter(|l| l.occupied).count(),
        occupied_area: m.leaves().iter().filter(|l| l.occupied).map(|l| l.size * l.size).sum(),
        leaf_sizes: sizes,
    };
    print!("{}", String::from_utf8(json_pretty(&info)?)?);
    if let Some(p) = &a.svg {
        let plot = Plot { map: m, footprint: &sc.footprint, denied: &sc.noise.denied, plan: None };
        write_atomic(p, plot.render().as_bytes())?;
    }
    Ok(EXIT_OK)
}
