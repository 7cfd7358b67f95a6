//! Successor generation with graduated fidelity.

use crate::belief::Belief;
use crate::collision::PathCost;
use crate::error::Result;
use crate::map::MultiResMap;
use crate::model::{LatticeSpec, LatticeState};
use crate::primitives::{MotionPrimitive, PrimitiveSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Successor {
    pub state: LatticeState,
    pub primitive: u32,
    pub cost: PathCost,
    pub belief: Belief,
}

/// Side of the map leaf containing a lattice state, or 0 outside the map.
pub fn cell_size_at(map: &MultiResMap, lattice: &LatticeSpec, s: &LatticeState) -> f64 {
    let p = lattice.pose(s).position();
    map.leaf_at(&p).map_or(0.0, |l| map.leaf(l).size)
}

/// Whether a long primitive may skip the finer ones: the cells at both ends
/// must together span the displacement.
pub fn size_check(map: &MultiResMap, lattice: &LatticeSpec, a: &LatticeState, b: &LatticeState) -> bool {
    let pa = lattice.pose(a).position();
    let pb = lattice.pose(b).position();
    cell_size_at(map, lattice, a) + cell_size_at(map, lattice, b) >= pa.distance(&pb)
}

/// Successors of `from`. With `graduated` set, each group contributes its
/// longest member that passes the size check and has zero collision cost, or
/// failing that its shortest member; otherwise every member is emitted.
///
/// `evaluate` returns the edge cost and end belief for a primitive applied at
/// `from`, or `None` when the edge is certainly in collision.
pub fn successors<F>(
    from: &LatticeState,
    set: &PrimitiveSet,
    map: &MultiResMap,
    graduated: bool,
    mut evaluate: F,
) -> Result<Vec<Successor>>
where
    F: FnMut(&MotionPrimitive) -> Result<Option<(PathCost, Belief)>>,
{
    let mut out = Vec::new();
    for group in set.groups_from(from.ith) {
        if !graduated {
            for &id in &group.members {
                let p = set.primitive(id);
                if let Some((cost, belief)) = evaluate(p)? {
                    out.push(Successor { state: p.apply(from), primitive: id, cost, belief });
                }
            }
            continue;
        }
        let mut chosen = None;
        for &id in &group.members {
            let p = set.primitive(id);
            let to = p.apply(from);
            if !size_check(map, &set.lattice, from, &to) {
                continue;
            }
            if let Some((cost, belief)) = evaluate(p)? {
                if cost.c == 0.0 {
                    chosen = Some(Successor { state: to, primitive: id, cost, belief });
                    break;
                }
            }
        }
        if chosen.is_none() {
            let &id = group.members.last().expect("groups are never empty");
            let p = set.primitive(id);
            if let Some((cost, belief)) = evaluate(p)? {
                chosen = Some(Successor { state: p.apply(from), primitive: id, cost, belief });
            }
        }
        out.extend(chosen);
    }
    Ok(out)
}
