//! Safety-first motion planning on state lattices under motion and sensing
//! uncertainty.
//!
//! The planner searches a lattice of precomputed motion primitives with an
//! anytime weighted A*. Each edge is scored by a hierarchical cost: collision
//! risk first (estimated by deterministically sampling the predicted LQG state
//! distribution against the robot's real shape), traversal time second and
//! final covariance trace last. Successors are generated with graduated
//! fidelity: long primitives in open space, short ones near obstacles. The
//! heuristic combines a multi-resolution obstacle-aware Dijkstra grid with a
//! free-space lookup table.

pub mod belief;
pub mod collision;
pub mod error;
pub mod footprint;
pub mod geometry;
pub mod heuristics;
pub mod map;
pub mod model;
pub mod planner;
pub mod primitives;
pub mod rng;
pub mod scenario;
pub mod sim;

pub use belief::{Belief, BeliefTrajectory, NoiseModel};
pub use collision::{PathCost, SigmaSampleSet};
pub use error::{Error, Result};
pub use footprint::Footprint;
pub use geometry::{Aabb, ConvexPolygon, Point2, Pose2};
pub use map::{MapCell, MultiResMap, OccupancyGrid};
pub use model::{Cov3, LatticeSpec, LatticeState, ModelKind, RobotModel, State3};
pub use planner::{PlanResult, PlannerConfig};
pub use primitives::{MotionPrimitive, PrimitiveGroup, PrimitiveSet};
pub use scenario::{LoadedScenario, Scenario};
pub use sim::{BatchSummary, ExecutionPlan, ExecutionTrace};
