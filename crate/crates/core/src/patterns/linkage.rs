use rayon::prelude::*;

use crate::Scalar;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    /// Dense labels numbered by each set's smallest element.
    pub fn labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut label_of_root = vec![usize::MAX; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let r = self.find(i);
                if label_of_root[r] == usize::MAX {
                    label_of_root[r] = next;
                    next += 1;
                }
                label_of_root[r]
            })
            .collect()
    }
}

/// Single-linkage clustering with a distance cutoff, computed as the connected
/// components of the graph joining every pair closer than `cutoff`.
///
/// Labels are dense and ordered by each cluster's smallest member.
pub fn threshold_components<T, F>(n: usize, distance: F, cutoff: T) -> Vec<usize>
where
    T: Scalar,
    F: Fn(usize, usize) -> T + Sync,
{
    let close: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).filter(|&j| distance(i, j) < cutoff).collect())
        .collect();
    let mut uf = UnionFind::new(n);
    for (i, js) in close.iter().enumerate() {
        for &j in js {
            uf.union(i, j);
        }
    }
    uf.labels()
}
