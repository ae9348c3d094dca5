use mdflow_core::fixtures;
use mdflow_core::graph::{
    execute_trajectory, Direction, Graph, GraphDocument, NoopObserver, RunCache, RunOptions, RunOutput,
};
use mdflow_core::nodes::Catalog;
use mdflow_core::{AttributeStore, Trajectory};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::json;

fn run(json: &str, traj: &Trajectory, cache: Option<&mut RunCache>, opts: &RunOptions) -> (RunOutput, AttributeStore) {
    let mut g = Graph::from_json(json, &Catalog::builtin()).unwrap();
    let mut store = AttributeStore::new();
    let out = execute_trajectory(&mut g, traj, &mut store, cache, opts, &mut NoopObserver).unwrap();
    (out, store)
}

fn assert_same(a: &(RunOutput, AttributeStore), b: &(RunOutput, AttributeStore)) {
    assert_eq!(a.0.scenes, b.0.scenes);
    assert_eq!(a.0.report.plots, b.0.report.plots);
    assert_eq!(a.0.report.frames, b.0.report.frames);
    assert_eq!(a.0.report.errors, b.0.report.errors);
    assert_eq!(a.1, b.1);
}

fn fixture_cases() -> Vec<(&'static str, Trajectory)> {
    vec![
        (fixtures::HYDRATE_GRAPH, fixtures::hydrate_trajectory()),
        (fixtures::TRACKING_GRAPH, fixtures::cluster_trajectory()),
        (RECURRENCE_GRAPH, fixtures::cluster_trajectory()),
    ]
}

/// `acc` accumulates component ids over visited frames.
const RECURRENCE_GRAPH: &str = r#"{
  "nodes": [
    {"id": 1, "kind": "get_positions", "params": {}},
    {"id": 2, "kind": "list_neighbors", "params": {"cutoff": 1.5}},
    {"id": 3, "kind": "group_list", "params": {}},
    {"id": 4, "kind": "cast", "params": {"from": "i64", "to": "f64", "rank": 1}},
    {"id": 5, "kind": "get_attribute", "params": {"name": "acc", "mode": "carry"}},
    {"id": 6, "kind": "add", "params": {"dtype": "f64", "rank": 1}},
    {"id": 7, "kind": "set_attribute", "params": {"name": "acc"}}
  ],
  "connections": [
    {"from": "1.positions", "to": "2.positions"},
    {"from": "2.offsets", "to": "3.offsets"},
    {"from": "2.neighbors", "to": "3.neighbors"},
    {"from": "3.ids", "to": "4.values"},
    {"from": "5.values", "to": "6.a"},
    {"from": "4.out", "to": "6.b"},
    {"from": "6.out", "to": "7.values"}
  ]
}"#;

pub fn cache_on_and_off_agree() {
    for (json, traj) in fixture_cases() {
        let on = RunOptions::default();
        let off = RunOptions {
            use_cache: false,
            ..RunOptions::default()
        };
        let mut cache = RunCache::new();
        let cached = run(json, &traj, Some(&mut cache), &on);
        let plain = run(json, &traj, None, &off);
        assert_same(&cached, &plain);
        assert!(cached.0.report.errors.is_empty());
    }
}

pub fn consecutive_runs_agree_and_hit_the_cache() {
    for (json, traj) in fixture_cases() {
        let mut cache = RunCache::new();
        let first = run(json, &traj, Some(&mut cache), &RunOptions::default());
        let second = run(json, &traj, Some(&mut cache), &RunOptions::default());
        assert_same(&first, &second);
        assert!(second.0.report.cache_hits > 0);
    }
}

pub fn recurrence_accumulates() {
    let traj = fixtures::cluster_trajectory();
    let (out, store) = run(RECURRENCE_GRAPH, &traj, None, &RunOptions::default());
    assert!(out.report.errors.is_empty());

    // Oracle: chain components by hand for each frame layout.
    let ids_for = |k: usize| -> Vec<f64> {
        let mut ids = vec![0.0; 13];
        match k {
            0..15 => {
                ids[6..10].fill(1.0);
                ids[10..13].fill(2.0);
            }
            15..30 => ids[10..13].fill(1.0),
            30..40 => {
                ids[3..6].fill(1.0);
                ids[10..13].fill(2.0);
            }
            _ => ids.iter_mut().enumerate().for_each(|(i, v)| *v = i as f64),
        }
        ids
    };
    let mut acc = vec![0.0; 13];
    for k in 0..fixtures::CLUSTER_FRAMES {
        for (a, b) in acc.iter_mut().zip(ids_for(k)) {
            *a += b;
        }
        assert_eq!(store.get("acc", k).unwrap(), acc.as_slice(), "frame {k}");
    }
}

pub fn tracking_follows_constructed_set() {
    let traj = fixtures::cluster_trajectory();
    let (out, store) = run(fixtures::TRACKING_GRAPH, &traj, None, &RunOptions::default());
    assert!(out.report.errors.is_empty());
    for (k, set) in fixtures::cluster_expected_tracked().iter().enumerate() {
        let expected: Vec<f64> = (0..13).map(|i| set.contains(&i) as u8 as f64).collect();
        assert_eq!(store.get("tracked", k).unwrap(), expected.as_slice(), "frame {k}");
    }
}

pub fn backward_on_reversed_copy_mirrors_forward() {
    let frames = fixtures::cluster_frames();
    let n = frames.len();
    let forward_traj = Trajectory::from_frames(frames.clone(), "fwd").unwrap();
    let reversed_traj = Trajectory::from_frames(frames.into_iter().rev().collect(), "rev").unwrap();
    let (_, fwd) = run(fixtures::TRACKING_GRAPH, &forward_traj, None, &RunOptions::default());
    let back = RunOptions {
        direction: Direction::Backward,
        ..RunOptions::default()
    };
    let (_, rev) = run(fixtures::TRACKING_GRAPH, &reversed_traj, None, &back);
    for k in 0..n {
        assert_eq!(fwd.get("channel", k), rev.get("channel", n - 1 - k), "frame {k}");
        assert_eq!(fwd.get("tracked", k), rev.get("tracked", n - 1 - k));
    }
}

pub fn node_id_permutation_does_not_change_results() {
    let traj = fixtures::cluster_trajectory();
    let base = run(fixtures::TRACKING_GRAPH, &traj, None, &RunOptions::default());
    let doc = GraphDocument::from_json(fixtures::TRACKING_GRAPH).unwrap();
    let mut rng = StdRng::seed_from_u64(9);
    for _ in 0..5 {
        let mut ids: Vec<u64> = (100..100 + doc.nodes.len() as u64).collect();
        ids.shuffle(&mut rng);
        let remap = |old: u64| ids[(old - 1) as usize];
        let mut d = doc.clone();
        for node in &mut d.nodes {
            node.id = remap(node.id);
        }
        d.nodes.shuffle(&mut rng);
        for c in &mut d.connections {
            for end in [&mut c.from, &mut c.to] {
                let (id, port) = end.split_once('.').unwrap();
                *end = format!("{}.{port}", remap(id.parse().unwrap()));
            }
        }
        let permuted = run(&d.to_json_pretty(), &traj, None, &RunOptions::default());
        assert_same(&base, &permuted);
    }
}

fn arithmetic_chain(len: usize, back_edge: Option<(usize, usize)>) -> String {
    let mut nodes = vec![json!({"id": 1, "kind": "const", "params": {"value": [1.0, 2.0]}})];
    let mut conns = Vec::new();
    for i in 0..len {
        let id = i + 2;
        nodes.push(json!({"id": id, "kind": "add", "params": {"dtype": "f64", "rank": 1}}));
        let a = if i == 0 { "1.value".to_string() } else { format!("{}.out", id - 1) };
        conns.push(json!({"from": a, "to": format!("{id}.a")}));
        let b = match back_edge {
            Some((from, to)) if to == i => format!("{}.out", from + 2),
            _ => "1.value".to_string(),
        };
        conns.push(json!({"from": b, "to": format!("{id}.b")}));
    }
    json!({"nodes": nodes, "connections": conns}).to_string()
}

pub fn port_cycles_are_always_rejected() {
    let catalog = Catalog::builtin();
    let mut rng = StdRng::seed_from_u64(10);
    for _ in 0..100 {
        let len = rng.gen_range(1..12);
        let to = rng.gen_range(0..len);
        let from = rng.gen_range(to..len);
        let diags = Graph::from_json(&arithmetic_chain(len, Some((from, to))), &catalog).unwrap_err();
        assert!(diags.iter().any(|d| d.code == "CycleDetected"), "{diags:?}");
        // The same chain without the back edge is fine.
        Graph::from_json(&arithmetic_chain(len, None), &catalog).unwrap();
    }
}

pub fn attribute_recurrence_is_always_accepted() {
    let catalog = Catalog::builtin();
    let traj = fixtures::cluster_trajectory();
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..20 {
        let name = format!("a{}", rng.gen_range(0..1000));
        let mode = ["carry", "frame"][rng.gen_range(0..2)];
        let json = RECURRENCE_GRAPH.replace("\"acc\"", &format!("\"{name}\"")).replace("\"carry\"", &format!("\"{mode}\""));
        let mut g = Graph::from_json(&json, &catalog).unwrap();
        let mut store = AttributeStore::new();
        let out = execute_trajectory(&mut g, &traj, &mut store, None, &RunOptions::default(), &mut NoopObserver).unwrap();
        assert!(out.report.errors.is_empty());
    }
}
