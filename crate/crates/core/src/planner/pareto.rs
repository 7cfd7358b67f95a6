//! Per-state label sets: a label survives unless another one at the same
//! lattice state is at least as good in every cost component.

use crate::collision::PathCost;

#[derive(Debug, Clone, Default)]
pub struct ParetoSet {
    labels: Vec<(PathCost, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Admission {
    /// The label was added; the listed handles are now dominated.
    Kept(Vec<usize>),
    Pruned,
}

impl ParetoSet {
    /// Offers a label with an opaque handle.
    pub fn offer(&mut self, cost: PathCost, handle: usize) -> Admission {
        if self.labels.iter().any(|(c, _)| c.dominates(&cost)) {
            return Admission::Pruned;
        }
        let mut removed = Vec::new();
        self.labels.retain(|(c, h)| {
            if cost.dominates(c) {
                removed.push(*h);
                false
            } else {
                true
            }
        });
        self.labels.push((cost, handle));
        Admission::Kept(removed)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn handles(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().map(|(_, h)| *h)
    }
}

/// Applies [`ParetoSet::offer`] to a sequence and returns the surviving indices.
pub fn pareto_filter(costs: &[PathCost]) -> Vec<usize> {
    let mut set = ParetoSet::default();
    for (i, c) in costs.iter().enumerate() {
        set.offer(*c, i);
    }
    let mut out: Vec<usize> = set.handles().collect();
    out.sort_unstable();
    out
}
