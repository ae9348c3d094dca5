use std::collections::BTreeMap;

use super::NeighborList;

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

    /// Component ids `0..K`, numbered by each component's smallest member.
    pub fn canonical_labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut id_of_root = vec![usize::MAX; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let r = self.find(i);
                if id_of_root[r] == usize::MAX {
                    id_of_root[r] = next;
                    next += 1;
                }
                id_of_root[r]
            })
            .collect()
    }
}

/// Connected components of the neighbor graph.
pub fn group_list(nl: &NeighborList) -> Vec<usize> {
    let n = nl.atom_count();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for &j in nl.row(i) {
            uf.union(i, j);
        }
    }
    uf.canonical_labels()
}

/// 1 where the id equals the most frequent id (smallest id on ties), else 0.
pub fn mode_mask(ids: &[i64]) -> Vec<i64> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &id in ids {
        *counts.entry(id).or_default() += 1;
    }
    // BTreeMap iterates ascending, so the first maximum is the smallest id.
    let Some(modal) = counts
        .iter()
        .fold(None::<(i64, usize)>, |best, (&id, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((id, c)),
        })
        .map(|(id, _)| id)
    else {
        return Vec::new();
    };
    ids.iter().map(|&id| (id == modal) as i64).collect()
}
