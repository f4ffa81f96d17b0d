use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use super::PatternError;
use crate::reachability::ReachabilityGraph;
use crate::Scalar;

/// Per-node path reachability: `descendants[i]` holds every node reachable from
/// `i` along at least one edge, `ancestors[i]` every node that reaches `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachableSets {
    pub descendants: Vec<FixedBitSet>,
    pub ancestors: Vec<FixedBitSet>,
}

/// Component ids path-connected to `owner` in either direction, plus the owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub owner: usize,
    pub members: FixedBitSet,
}

impl Signature {
    pub fn contains(&self, id: usize) -> bool {
        self.members.contains(id)
    }

    pub fn len(&self) -> usize {
        self.members.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_clear()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.ones()
    }
}

fn reach_from(start: usize, adj: &[Vec<usize>]) -> FixedBitSet {
    let mut seen = FixedBitSet::with_capacity(adj.len());
    let mut stack: Vec<usize> = adj[start].clone();
    while let Some(v) = stack.pop() {
        if seen.put(v) {
            continue;
        }
        stack.extend(adj[v].iter().copied().filter(|&w| !seen.contains(w)));
    }
    seen
}

/// Depth-first search from every node on the graph and on its reverse.
pub fn path_reachable_sets<T: Scalar>(graph: &ReachabilityGraph<T>) -> ReachableSets {
    let succ = graph.successors();
    let pred = graph.predecessors();
    let n = graph.node_count;
    ReachableSets {
        descendants: (0..n).into_par_iter().map(|i| reach_from(i, &succ)).collect(),
        ancestors: (0..n).into_par_iter().map(|i| reach_from(i, &pred)).collect(),
    }
}

impl ReachableSets {
    pub fn signature(&self, owner: usize) -> Signature {
        let mut members = self.descendants[owner].clone();
        members.union_with(&self.ancestors[owner]);
        members.insert(owner);
        Signature { owner, members }
    }

    pub fn signatures(&self) -> Vec<Signature> {
        (0..self.descendants.len()).map(|i| self.signature(i)).collect()
    }
}

/// Signature of a single node.
pub fn signature<T: Scalar>(graph: &ReachabilityGraph<T>, owner: usize) -> Result<Signature, PatternError> {
    if owner >= graph.node_count {
        return Err(PatternError::InvalidNode {
            id: owner,
            count: graph.node_count,
        });
    }
    let mut members = reach_from(owner, &graph.successors());
    members.union_with(&reach_from(owner, &graph.predecessors()));
    members.insert(owner);
    Ok(Signature { owner, members })
}
