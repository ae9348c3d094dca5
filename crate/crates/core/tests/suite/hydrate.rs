use std::collections::{BTreeMap, BTreeSet, VecDeque};

use mdflow_core::fixtures;
use mdflow_core::hydrate::{
    covalent_map, filter_guests, filter_waters, find_links, hbonds_filtered, mcg_order_parameter, reconnect_water,
    register_hydrate, CovalentMap, Cone,
};
use mdflow_core::model::PeriodicCell;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn canonical(cycle: &[usize]) -> Vec<usize> {
    let n = cycle.len();
    let s = (0..n).min_by_key(|&i| cycle[i]).unwrap();
    let fwd: Vec<usize> = (0..n).map(|k| cycle[(s + k) % n]).collect();
    if fwd[1] < fwd[n - 1] {
        fwd
    } else {
        let mut back = vec![fwd[0]];
        back.extend(fwd[1..].iter().rev());
        back
    }
}

/// Every closed walk over `k` distinct vertices, canonicalized.
fn brute_cycles(n: usize, edges: &[(usize, usize)], k: usize) -> BTreeSet<Vec<usize>> {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    fn walk(adj: &[Vec<bool>], k: usize, path: &mut Vec<usize>, found: &mut BTreeSet<Vec<usize>>) {
        let last = *path.last().unwrap();
        if path.len() == k {
            if adj[last][path[0]] {
                found.insert(canonical(path));
            }
            return;
        }
        for v in 0..adj.len() {
            if adj[last][v] && !path.contains(&v) {
                path.push(v);
                walk(adj, k, path, found);
                path.pop();
            }
        }
    }
    let mut found = BTreeSet::new();
    for s in 0..n {
        walk(&adj, k, &mut vec![s], &mut found);
    }
    found
}

pub fn find_links_matches_brute_force() {
    let mut rng = StdRng::seed_from_u64(5);
    for g in 0..50 {
        let n = rng.gen_range(5..=30);
        let p = rng.gen_range(0.05..0.3);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        let k = [4, 5, 5, 6][g % 4];
        let got: BTreeSet<Vec<usize>> = find_links(&edges, k).into_iter().collect();
        assert_eq!(got, brute_cycles(n, &edges, k), "graph {g}");
    }
}

pub fn complete_graph_has_twelve_five_cycles() {
    let edges: Vec<(usize, usize)> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
    assert_eq!(find_links(&edges, 5).len(), 12);
    assert_eq!(brute_cycles(5, &edges, 5).len(), 12);
}

pub fn pentagon_fixture() {
    let f = fixtures::cage_frame();
    let cell = PeriodicCell::from_box(&f.sim_box).unwrap();
    let guests = f.select_types(&["C"]);
    let oxygens = f.select_types(&["OW"]);
    let hydrogens = f.select_types(&["HW1", "HW2"]);
    let guest_pos: Vec<[f64; 3]> = guests.iter().map(|&g| f.positions[g]).collect();

    let pairs = filter_guests(&guest_pos, &guests, &cell, 9.0).unwrap();
    assert_eq!(pairs, vec![(0, 1)]);
    let waters = filter_waters(&pairs, &f.positions, &oxygens, &cell, &Cone::default());
    assert_eq!(waters[0], oxygens);
    let map = covalent_map(&f, &cell, &oxygens, &hydrogens, 1.25).unwrap();
    let edges = hbonds_filtered(&waters[0], &f.positions, &map, &cell, 3.5, 150.0).unwrap();
    assert_eq!(edges.len(), 5);
    let bonds = reconnect_water(&edges, &map).unwrap();
    let rings = find_links(&bonds, 5);
    assert_eq!(rings.len(), 1);
    let labels = register_hydrate(f.atom_count(), &pairs, &waters, &rings, 1).unwrap();
    assert_eq!(labels.components, 1);
    assert_eq!(labels.count, 7);
    assert_eq!(mcg_order_parameter(&labels.labels), 7);
}

fn unit(rng: &mut StdRng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

fn mic(a: [f64; 3], b: [f64; 3], edge: f64) -> [f64; 3] {
    std::array::from_fn(|k| {
        let d = b[k] - a[k];
        d - edge * (d / edge).round()
    })
}

fn len(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn hbonds_match_triple_loop() {
    let mut rng = StdRng::seed_from_u64(6);
    for _ in 0..50 {
        let edge = rng.gen_range(12.0..20.0);
        let n_w = rng.gen_range(10..60);
        let mut pos = Vec::new();
        let mut map = CovalentMap::new();
        let mut oxygens = Vec::new();
        for _ in 0..n_w {
            let o: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.0..edge));
            let oi = pos.len();
            pos.push(o);
            oxygens.push(oi);
            for _ in 0..2 {
                let d = unit(&mut rng);
                map.insert(pos.len(), oi);
                pos.push(std::array::from_fn(|k| o[k] + 0.96 * d[k]));
            }
        }
        let selected: Vec<usize> = oxygens.iter().copied().filter(|_| rng.gen_bool(0.8)).collect();
        let cell = PeriodicCell::cubic(edge);
        let got = hbonds_filtered(&selected, &pos, &map, &cell, 3.5, 150.0).unwrap();

        let mut expected = Vec::new();
        for &o in &selected {
            for (&h, _) in map.iter().filter(|(_, &oo)| oo == o) {
                for &acc in &selected {
                    if acc == o || len(mic(pos[o], pos[acc], edge)) > 3.5 {
                        continue;
                    }
                    let (u, v) = (mic(pos[h], pos[o], edge), mic(pos[h], pos[acc], edge));
                    let cos = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]) / (len(u) * len(v));
                    if cos.clamp(-1.0, 1.0).acos().to_degrees() >= 150.0 {
                        expected.push((h, acc));
                    }
                }
            }
        }
        expected.sort_unstable();
        assert_eq!(got, expected);
    }
}

pub fn guest_cutoff_is_inclusive() {
    let cell = PeriodicCell::cubic(40.0);
    let at = |d: f64| filter_guests(&[[1.0, 2.0, 3.0], [1.0 + d, 2.0, 3.0]], &[0, 1], &cell, 9.0).unwrap().len();
    assert_eq!(at(9.0), 1);
    assert_eq!(at(8.999_999), 1);
    assert_eq!(at(9.000_001), 0);
    // Across the boundary: 36.5 apart is 3.5 by minimum image.
    let wrapped = filter_guests(&[[0.5, 0.0, 0.0], [37.0, 0.0, 0.0]], &[0, 1], &cell, 9.0).unwrap();
    assert_eq!(wrapped.len(), 1);
}

pub fn register_matches_bfs_oracle() {
    let mut rng = StdRng::seed_from_u64(8);
    for _ in 0..50 {
        let n_guests = rng.gen_range(2..12);
        let n_atoms = n_guests + 30;
        let waters_pool: Vec<usize> = (n_guests..n_atoms).collect();
        let rings: Vec<Vec<usize>> = (0..rng.gen_range(0..6))
            .map(|_| {
                let mut r: Vec<usize> = (0..5).map(|_| waters_pool[rng.gen_range(0..30)]).collect();
                r.sort_unstable();
                r.dedup();
                r
            })
            .collect();
        let mut pairs = Vec::new();
        let mut waters = Vec::new();
        for a in 0..n_guests {
            for b in a + 1..n_guests {
                if rng.gen_bool(0.3) {
                    pairs.push((a, b));
                    let mut w: Vec<usize> = waters_pool.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
                    w.sort_unstable();
                    waters.push(w);
                }
            }
        }
        let got = register_hydrate(n_atoms, &pairs, &waters, &rings, 1).unwrap();

        // Oracle: coordinated pairs, BFS over guests, union of witnessing waters.
        let witnessed: Vec<Vec<&Vec<usize>>> = waters
            .iter()
            .map(|w| rings.iter().filter(|r| r.iter().all(|v| w.contains(v))).collect())
            .collect();
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut labeled_waters = BTreeSet::new();
        for (p, &(a, b)) in pairs.iter().enumerate() {
            if !witnessed[p].is_empty() {
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
                labeled_waters.extend(witnessed[p].iter().copied().flatten().copied());
            }
        }
        let mut comps = 0;
        let mut seen = BTreeSet::new();
        for &s in adj.keys() {
            if !seen.insert(s) {
                continue;
            }
            comps += 1;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &w in &adj[&v] {
                    if seen.insert(w) {
                        q.push_back(w);
                    }
                }
            }
        }
        assert_eq!(got.components, comps);
        assert_eq!(got.count, adj.len() + labeled_waters.len());
        for g in 0..n_guests {
            assert_eq!(got.labels[g] != 0.0, adj.contains_key(&g));
        }
    }
}
