//! Scenario files: one versioned JSON document naming the map, robot,
//! primitives, noise and planner settings. Relative paths resolve against the
//! directory holding the scenario.

use crate::belief::NoiseModel;
use crate::error::{Error, Result};
use crate::footprint::Footprint;
use crate::geometry::{Aabb, Point2};
use crate::map::io::load_pgm_map;
use crate::map::{MultiResMap, OccupancyGrid};
use crate::model::{Cov3, LatticeSpec, LatticeState, RobotModel};
use crate::planner::{PlannerConfig, PlanningProblem};
use crate::primitives::{build_control_set, PrimitiveSet};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCENARIO_VERSION: u32 = 1;

/// A covariance given as a scalar multiple of the identity or as nine
/// column-major entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovSpec {
    Scalar(f64),
    Full(Cov3),
}

impl CovSpec {
    pub fn matrix(&self) -> Cov3 {
        match self {
            CovSpec::Scalar(s) => Cov3::identity() * *s,
            CovSpec::Full(m) => *m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapSpec {
    Pgm {
        pgm: PathBuf,
        sidecar: PathBuf,
        #[serde(default = "default_threshold")]
        occ_threshold: f64,
    },
    /// Axis-aligned obstacles rasterized onto a `width` x `height` grid.
    Boxes {
        width: usize,
        height: usize,
        cell_size: f64,
        #[serde(default)]
        origin: [f64; 2],
        #[serde(default)]
        obstacles: Vec<Aabb>,
    },
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FootprintSpec {
    File { file: PathBuf },
    Rectangle { rectangle: [f64; 2] },
    Polygons { polygons: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrimitiveSpec {
    File { file: PathBuf },
    Generate { model: RobotModel, lattice: LatticeSpec, lengths: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub process: CovSpec,
    /// Measurement noise where measurements arrive. `null` means none ever do.
    pub measurement: Option<CovSpec>,
    #[serde(default)]
    pub denied: Vec<Aabb>,
}

impl NoiseSpec {
    pub fn model(&self) -> NoiseModel {
        match &self.measurement {
            Some(n) => NoiseModel {
                process: self.process.matrix(),
                measurement: n.matrix(),
                denied: self.denied.clone(),
                denied_everywhere: false,
            },
            None => NoiseModel { denied: self.denied.clone(), ..NoiseModel::open_loop(self.process.matrix()) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub map: MapSpec,
    pub footprint: FootprintSpec,
    pub primitives: PrimitiveSpec,
    pub start: LatticeState,
    pub goal: LatticeState,
    pub sigma0: CovSpec,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub planner: PlannerConfig,
}

/// A scenario with every referenced file read and validated.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub map: MultiResMap,
    pub footprint: Footprint,
    pub primitives: PrimitiveSet,
    pub noise: NoiseModel,
    pub sigma0: Cov3,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        if s.version != SCENARIO_VERSION {
            return Err(Error::Scenario(format!("unsupported scenario version {}", s.version)));
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load_file(path: &Path) -> Result<LoadedScenario> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text)?.resolve(base)
    }

    /// Reads referenced files relative to `base` and checks the invariants.
    pub fn resolve(self, base: &Path) -> Result<LoadedScenario> {
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let map = match &self.map {
            MapSpec::Pgm { pgm, sidecar, occ_threshold } => load_pgm_map(&at(pgm), &at(sidecar), *occ_threshold)?,
            MapSpec::Boxes { width, height, cell_size, origin, obstacles } => {
                let mut g = OccupancyGrid::new(*width, *height);
                for b in obstacles {
                    let rel = |p: &Point2| Point2::new(p.x - origin[0], p.y - origin[1]);
                    g.fill_box(*cell_size, rel(&b.min), rel(&b.max));
                }
                MultiResMap::from_grid(&g, *cell_size, Point2::new(origin[0], origin[1]))?
            }
        };
        let footprint = match &self.footprint {
            FootprintSpec::File { file } => Footprint::from_json(&std::fs::read_to_string(at(file))?)?,
            FootprintSpec::Rectangle { rectangle } => Footprint::rectangle(rectangle[0], rectangle[1]),
            FootprintSpec::Polygons { polygons } => {
                Footprint::from_json(&serde_json::json!({ "polygons": polygons }).to_string())?
            }
        };
        let primitives = match &self.primitives {
            PrimitiveSpec::File { file } => PrimitiveSet::from_json(&std::fs::read_to_string(at(file))?)?,
            PrimitiveSpec::Generate { model, lattice, lengths } => build_control_set(model, lattice, lengths)?,
        };
        let sigma0 = self.sigma0.matrix();
        crate::belief::psd_sqrt(&sigma0)
            .map_err(|_| Error::Scenario("start covariance is not positive semi-definite".into()))?;
        let noise = self.noise.model();
        for (name, m) in [("process", &noise.process), ("measurement", &noise.measurement)] {
            crate::belief::psd_sqrt(m)
                .map_err(|_| Error::Scenario(format!("{name} noise is not positive semi-definite")))?;
        }
        let h = primitives.lattice.headings;
        for (name, s) in [("start", &self.start), ("goal", &self.goal)] {
            if s.ith >= h {
                return Err(Error::Scenario(format!("{name} heading index {} is not below {h}", s.ith)));
            }
        }
        Ok(LoadedScenario { scenario: self, map, footprint, primitives, noise, sigma0 })
    }
}

impl LoadedScenario {
    pub fn problem(&self) -> PlanningProblem<'_> {
        PlanningProblem {
            map: &self.map,
            footprint: &self.footprint,
            primitives: &self.primitives,
            noise: &self.noise,
            start: self.scenario.start,
            goal: self.scenario.goal,
            sigma0: self.sigma0,
            config: self.scenario.planner.clone(),
        }
    }
}
