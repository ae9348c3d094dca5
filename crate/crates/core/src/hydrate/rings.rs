//! Simple-cycle perception of fixed length.

use std::collections::BTreeMap;

pub const DEFAULT_RING_SIZE: usize = 5;

/// All simple cycles with exactly `n` vertices, in canonical form.
///
/// A ring starts at its smallest vertex and runs in the direction whose
/// second vertex is smaller than its last. The DFS only extends paths
/// through vertices larger than the start, so each ring is found once in
/// each direction and the direction test keeps one of them.
pub fn find_links(edges: &[(usize, usize)], n: usize) -> Vec<Vec<usize>> {
    if n < 3 {
        return Vec::new();
    }
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in edges {
        if a != b {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    for row in adj.values_mut() {
        row.sort_unstable();
        row.dedup();
    }

    let mut rings = Vec::new();
    let mut path = Vec::with_capacity(n);
    for &start in adj.keys() {
        path.clear();
        path.push(start);
        extend(&adj, n, &mut path, &mut rings);
    }
    rings.sort();
    rings
}

fn extend(adj: &BTreeMap<usize, Vec<usize>>, n: usize, path: &mut Vec<usize>, rings: &mut Vec<Vec<usize>>) {
    let start = path[0];
    let last = *path.last().unwrap();
    if path.len() == n {
        if path[1] < path[n - 1] && adj[&last].binary_search(&start).is_ok() {
            rings.push(path.clone());
        }
        return;
    }
    for &next in &adj[&last] {
        if next <= start || path.contains(&next) {
            continue;
        }
        path.push(next);
        extend(adj, n, path, rings);
        path.pop();
    }
}
