//! Hydrate labeling from coordinated guest pairs.

use std::collections::{BTreeMap, BTreeSet};

use crate::cluster::UnionFind;
use crate::nodes::NodeError;

/// Labels produced by [`register_hydrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct HydrateLabels {
    /// Per-atom component label, 0 when unlabeled.
    pub labels: Vec<f64>,
    pub components: usize,
    /// Labeled guests plus distinct labeled waters.
    pub count: usize,
}

/// Rings whose vertices all belong to `waters` (sorted ascending).
pub fn witnessing_rings<'r>(waters: &[usize], rings: &'r [Vec<usize>]) -> Vec<&'r Vec<usize>> {
    rings.iter().filter(|r| r.iter().all(|v| waters.binary_search(v).is_ok())).collect()
}

/// Assigns component labels to coordinated guests and their ring oxygens.
///
/// A pair is coordinated when at least `min_rings` rings lie entirely in
/// its selected waters. Components of the coordinated-pair graph are
/// numbered 1.. by their smallest guest. An oxygen witnessing rings of two
/// components keeps the smaller label.
pub fn register_hydrate(
    n_atoms: usize,
    pairs: &[(usize, usize)],
    waters: &[Vec<usize>],
    rings: &[Vec<usize>],
    min_rings: usize,
) -> Result<HydrateLabels, NodeError> {
    if pairs.len() != waters.len() {
        return Err(NodeError::ShapeMismatch {
            expected: vec![pairs.len()],
            actual: vec![waters.len()],
        });
    }
    let check = |i: usize| {
        if i < n_atoms {
            Ok(())
        } else {
            Err(NodeError::IndexOutOfRange {
                index: i as i64,
                len: n_atoms,
            })
        }
    };
    for &(a, b) in pairs {
        check(a)?;
        check(b)?;
    }
    for &v in rings.iter().flatten() {
        check(v)?;
    }

    let mut coordinated: Vec<(usize, Vec<&Vec<usize>>)> = Vec::new();
    for (p, w) in waters.iter().enumerate() {
        let mut sorted = w.clone();
        sorted.sort_unstable();
        let witnesses: Vec<&Vec<usize>> = witnessing_rings(&sorted, rings);
        if witnesses.len() >= min_rings.max(1) {
            coordinated.push((p, witnesses));
        }
    }

    let mut uf = UnionFind::new(n_atoms);
    let mut guests = BTreeSet::new();
    for &(p, _) in &coordinated {
        let (a, b) = pairs[p];
        uf.union(a, b);
        guests.insert(a);
        guests.insert(b);
    }
    // Guests ascend, so the first time a root is seen fixes its order.
    let mut label_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut labels = vec![0.0; n_atoms];
    for &g in &guests {
        let root = uf.find(g);
        let next = label_of_root.len() + 1;
        let l = *label_of_root.entry(root).or_insert(next);
        labels[g] = l as f64;
    }
    let mut water_label: BTreeMap<usize, usize> = BTreeMap::new();
    for (p, witnesses) in &coordinated {
        let l = label_of_root[&uf.find(pairs[*p].0)];
        for &o in witnesses.iter().copied().flatten() {
            let e = water_label.entry(o).or_insert(l);
            *e = (*e).min(l);
        }
    }
    for (&o, &l) in &water_label {
        if !guests.contains(&o) {
            labels[o] = l as f64;
        }
    }
    let count = labels.iter().filter(|&&v| v != 0.0).count();
    Ok(HydrateLabels {
        labels,
        components: label_of_root.len(),
        count,
    })
}

/// Number of labeled molecules.
pub fn mcg_order_parameter(labels: &[f64]) -> usize {
    labels.iter().filter(|&&v| v != 0.0).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cage() {
        let out = register_hydrate(9, &[(0, 1)], &[vec![2, 3, 4, 5, 6, 8]], &[vec![2, 3, 4, 5, 6]], 1).unwrap();
        assert_eq!(out.labels, vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(out.count, 7);
        assert_eq!(out.components, 1);
    }

    #[test]
    fn no_rings() {
        let out = register_hydrate(4, &[(0, 1)], &[vec![2, 3]], &[], 1).unwrap();
        assert_eq!(out.count, 0);
        assert!(out.labels.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ring_outside_pair_waters_does_not_count() {
        let out = register_hydrate(8, &[(0, 1)], &[vec![2, 3, 4, 5]], &[vec![2, 3, 4, 5, 6]], 1).unwrap();
        assert_eq!(out.count, 0);
    }

    #[test]
    fn disjoint_pairs_ordered_by_smallest_guest() {
        let out = register_hydrate(
            16,
            &[(1, 14), (0, 15)],
            &[vec![2, 3, 4, 5, 6], vec![7, 8, 9, 10, 11]],
            &[vec![2, 3, 4, 5, 6], vec![7, 8, 9, 10, 11]],
            1,
        )
        .unwrap();
        assert_eq!(out.labels[0], 1.0);
        assert_eq!(out.labels[15], 1.0);
        assert_eq!(out.labels[1], 2.0);
        assert_eq!(out.labels[7], 1.0);
        assert_eq!(out.labels[2], 2.0);
        assert_eq!(out.components, 2);
    }

    #[test]
    fn shared_oxygen_takes_smaller_label() {
        let out = register_hydrate(
            12,
            &[(0, 1), (10, 11)],
            &[vec![2, 3, 4, 5, 6], vec![6, 7, 8, 9, 2]],
            &[vec![2, 3, 4, 5, 6], vec![2, 6, 7, 8, 9]],
            1,
        )
        .unwrap();
        assert_eq!(out.labels[6], 1.0);
        assert_eq!(out.labels[7], 2.0);
        assert_eq!(out.count, 12);
    }

    #[test]
    fn threshold_parameter() {
        let out = register_hydrate(7, &[(0, 1)], &[vec![2, 3, 4, 5, 6]], &[vec![2, 3, 4, 5, 6]], 2).unwrap();
        assert_eq!(out.count, 0);
    }

    #[test]
    fn order_parameter_examples() {
        assert_eq!(mcg_order_parameter(&[0.0, 1.0, 1.0, 0.0, 2.0]), 3);
        assert_eq!(mcg_order_parameter(&[0.0; 4]), 0);
    }
}
