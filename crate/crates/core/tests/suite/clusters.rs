use std::collections::{BTreeSet, VecDeque};
use std::time::{Duration, Instant};

use mdflow_core::cluster::{group_list, list_neighbors, mode_mask, track_cluster, NeighborList};
use mdflow_core::model::PeriodicCell;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn brute_pairs(pos: &[[f64; 3]], edge: f64, cutoff: f64) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let mut d2 = 0.0;
            for k in 0..3 {
                let mut d = pos[j][k] - pos[i][k];
                d -= edge * (d / edge).round();
                d2 += d * d;
            }
            if d2.sqrt() <= cutoff {
                out.insert((i, j));
            }
        }
    }
    out
}

pub fn neighbor_lists_match_brute_force() {
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..100 {
        let n = rng.gen_range(2..=500);
        let cutoff = rng.gen_range(0.5..3.0);
        let edge = rng.gen_range(2.0 * cutoff..8.0 * cutoff);
        let pos: Vec<[f64; 3]> = (0..n)
            .map(|_| std::array::from_fn(|_| rng.gen_range(0.0..edge)))
            .collect();
        let nl = list_neighbors(&pos, &PeriodicCell::cubic(edge), cutoff).unwrap();
        let got: BTreeSet<_> = nl.pairs().into_iter().collect();
        assert_eq!(got, brute_pairs(&pos, edge, cutoff));
    }
}

pub fn large_frame_is_fast() {
    let mut rng = StdRng::seed_from_u64(2);
    // Liquid-like density: 100k atoms at about 0.033 per cubic angstrom.
    let edge = 145.0;
    let pos: Vec<[f64; 3]> = (0..100_000)
        .map(|_| std::array::from_fn(|_| rng.gen_range(0.0..edge)))
        .collect();
    let t = Instant::now();
    let nl = list_neighbors(&pos, &PeriodicCell::cubic(edge), 3.5).unwrap();
    let elapsed = t.elapsed();
    assert_eq!(nl.atom_count(), 100_000);
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
}

fn bfs_partition(n: usize, edges: &[(usize, usize)]) -> BTreeSet<BTreeSet<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut parts = BTreeSet::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut part = BTreeSet::new();
        let mut q = VecDeque::from([s]);
        seen[s] = true;
        while let Some(v) = q.pop_front() {
            part.insert(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    q.push_back(w);
                }
            }
        }
        parts.insert(part);
    }
    parts
}

pub fn components_match_bfs() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..100 {
        let n = rng.gen_range(1..80);
        let m = rng.gen_range(0..2 * n);
        let edges: Vec<(usize, usize)> = (0..m)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .filter(|(a, b)| a != b)
            .collect();
        let ids = group_list(&NeighborList::from_pairs(n, &edges));
        let mut parts = std::collections::BTreeMap::<usize, BTreeSet<usize>>::new();
        for (i, id) in ids.iter().enumerate() {
            parts.entry(*id).or_default().insert(i);
        }
        let got: BTreeSet<_> = parts.into_values().collect();
        assert_eq!(got, bfs_partition(n, &edges));
    }
}

pub fn mode_mask_matches_histogram_argmax() {
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..100 {
        let n = rng.gen_range(1..60);
        let ids: Vec<i64> = (0..n).map(|_| rng.gen_range(0..6)).collect();
        let mut hist = [0usize; 6];
        for &i in &ids {
            hist[i as usize] += 1;
        }
        let max = *hist.iter().max().unwrap();
        let modal = hist.iter().position(|&c| c == max).unwrap() as i64;
        let expected: Vec<i64> = ids.iter().map(|&i| (i == modal) as i64).collect();
        assert_eq!(mode_mask(&ids), expected);
    }
}

pub fn track_cluster_clears_when_nothing_overlaps() {
    let ids = [0, 0, 1, 1];
    assert_eq!(track_cluster(&ids, &[0.0; 4], 1).unwrap(), vec![0.0; 4]);
    assert_eq!(track_cluster(&ids, &[0.0, 1.0, 0.0, 0.0], 1).unwrap(), vec![1.0, 1.0, 0.0, 0.0]);
}
