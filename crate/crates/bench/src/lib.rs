//! Shared fixtures for the benchmarks.

use safelat_core::primitives::build_control_set;
use safelat_core::{Footprint, LatticeSpec, MultiResMap, OccupancyGrid, Point2, PrimitiveSet, RobotModel};

/// 32 x 32 m map at 0.125 m with two offset walls and a few boxes.
pub fn corridor_map() -> MultiResMap {
    let mut g = OccupancyGrid::new(256, 256);
    let c = 0.125;
    let boxes = [
        ((0.0, 9.5), (20.0, 10.5)),
        ((10.0, 19.5), (30.0, 20.5)),
        ((12.0, 0.0), (13.0, 3.0)),
        ((5.0, 14.0), (7.0, 16.0)),
    ];
    for ((x0, y0), (x1, y1)) in boxes {
        g.fill_box(c, Point2::new(x0, y0), Point2::new(x1, y1));
    }
    MultiResMap::from_grid(&g, c, Point2::new(0.0, 0.0)).expect("valid grid")
}

pub fn car() -> Footprint {
    Footprint::rectangle(3.0, 0.75)
}

pub fn primitives(lengths: &[f64]) -> PrimitiveSet {
    let lattice = LatticeSpec { resolution: 0.5, headings: 16 };
    build_control_set(&RobotModel::unicycle(1.0, 1.0, 0.125), &lattice, lengths).expect("primitives build")
}
