use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("occupancy grid has zero size")]
    EmptyGrid,
    #[error("cell size must be positive, got {0}")]
    NonPositiveCellSize(f64),
    #[error("point ({x}, {y}) lies outside the map extent")]
    OutsideExtent { x: f64, y: f64 },
    #[error("cell is not a leaf of this map")]
    NotALeaf,
    #[error("invalid subdivision target {target} for cell of size {size}")]
    InvalidTarget { size: f64, target: f64 },
    #[error("cell of size {size} is larger than the adjust size {f_plus}")]
    CellLargerThanAdjust { size: f64, f_plus: f64 },
    #[error("invalid footprint: {0}")]
    InvalidFootprint(String),
    #[error("invalid robot model: {0}")]
    InvalidModel(String),
    #[error("covariance is not positive semi-definite (min eigenvalue {0})")]
    NotPsd(f64),
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("belief trajectory has {beliefs} entries but the primitive has {poses} poses")]
    Misaligned { beliefs: usize, poses: usize },
    #[error("heuristic goal position collides with the optimistic shape")]
    GoalInCollision,
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
