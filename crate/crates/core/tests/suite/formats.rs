use std::io::Write;

use mdflow_core::fixtures;
use mdflow_core::io::{gro, lammps, open_trajectory, ssv, write_ssv, ColumnSpec, ImporterRegistry};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn tokens(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn attributed_ssv(seed: u64) -> String {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut s = String::from("el x y z charge pot\n");
    for f in 0..4 {
        let lz = if f % 2 == 0 { "0" } else { "12.5" };
        s.push_str(&format!("frame 5 10 11 {lz}\n"));
        for i in 0..5 {
            let v: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-50.0..50.0));
            s.push_str(&format!("{} {} {} {} {} {}\n", ["C", "O", "H"][i % 3], v[0], v[1], v[2], v[3], v[4]));
        }
    }
    s
}

pub fn ssv_write_parse_is_token_identical() {
    let docs = [fixtures::hydrate_ssv(), fixtures::cluster_ssv(), attributed_ssv(1), attributed_ssv(2)];
    for doc in docs {
        let (spec, frames) = ssv::read_all(&doc).unwrap();
        let mut out = Vec::new();
        write_ssv(&mut out, &spec, &frames).unwrap();
        let again = String::from_utf8(out).unwrap();
        assert_eq!(tokens(&doc), tokens(&again));
    }
}

fn gro_text(positions_nm: &[[f64; 3]], box_nm: [f64; 3]) -> String {
    let mut s = format!("random\n{:5}\n", positions_nm.len());
    for (i, p) in positions_nm.iter().enumerate() {
        s.push_str(&format!("{:>5}{:<5}{:>5}{:>5}{:8.3}{:8.3}{:8.3}\n", i / 3 + 1, "SOL", "OW", i + 1, p[0], p[1], p[2]));
    }
    s.push_str(&format!("{:10.5}{:10.5}{:10.5}\n", box_nm[0], box_nm[1], box_nm[2]));
    s
}

pub fn gro_coordinates_scale_by_ten() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let n = rng.gen_range(1..40);
        // Values on the 3-decimal grid, so the text is exact.
        let pos: Vec<[f64; 3]> = (0..n)
            .map(|_| std::array::from_fn(|_| rng.gen_range(0..5000) as f64 / 1000.0))
            .collect();
        let frames = gro::read_all(&gro_text(&pos, [5.0, 5.5, 6.0])).unwrap();
        let f = &frames[0];
        for (a, b) in f.positions.iter().zip(&pos) {
            for k in 0..3 {
                let text: f64 = format!("{:.3}", b[k]).parse().unwrap();
                assert_eq!(a[k], text * 10.0);
            }
        }
        assert_eq!(f.sim_box.lengths(), [50.0, 55.0, 60.0]);
    }
}

fn lammps_scaled(bounds: [[f64; 2]; 3], scaled: &[[f64; 3]]) -> String {
    let mut s = format!("ITEM: TIMESTEP\n0\nITEM: NUMBER OF ATOMS\n{}\nITEM: BOX BOUNDS pp pp pp\n", scaled.len());
    for b in bounds {
        s.push_str(&format!("{} {}\n", b[0], b[1]));
    }
    s.push_str("ITEM: ATOMS id type xs ys zs\n");
    // Reversed ids check the reordering too.
    for (i, p) in scaled.iter().enumerate().rev() {
        s.push_str(&format!("{} 1 {} {} {}\n", i + 1, p[0], p[1], p[2]));
    }
    s
}

pub fn lammps_scaled_coordinates_match_hand_values() {
    let cases: [([[f64; 2]; 3], Vec<[f64; 3]>, Vec<[f64; 3]>); 3] = [
        (
            [[0.0, 10.0], [0.0, 10.0], [0.0, 10.0]],
            vec![[0.5, 0.25, 0.1], [0.0, 1.0, 0.75]],
            vec![[5.0, 2.5, 1.0], [0.0, 10.0, 7.5]],
        ),
        (
            [[-5.0, 5.0], [2.0, 12.0], [-1.0, 3.0]],
            vec![[0.5, 0.5, 0.5], [0.25, 0.0, 1.0]],
            vec![[0.0, 7.0, 1.0], [-2.5, 2.0, 3.0]],
        ),
        (
            [[1.5, 4.5], [0.0, 8.0], [10.0, 30.0]],
            vec![[0.5, 0.125, 0.25], [1.0, 0.75, 0.0], [0.0, 0.5, 0.5]],
            vec![[3.0, 1.0, 15.0], [4.5, 6.0, 10.0], [1.5, 4.0, 20.0]],
        ),
    ];
    for (bounds, scaled, expected) in cases {
        let frames = lammps::read_all(&lammps_scaled(bounds, &scaled)).unwrap();
        assert_eq!(frames[0].positions, expected);
    }
}

pub fn lazy_loads_match_sequential_parse() {
    let frames: Vec<_> = fixtures::hydrate_frames().into_iter().take(10).collect();
    let text = fixtures::ssv_text(&frames);
    let (_, sequential) = ssv::read_all(&text).unwrap();

    let mut file = tempfile::Builder::new().suffix(".ssv").tempfile().unwrap();
    file.write_all(text.as_bytes()).unwrap();
    let mut registry = ImporterRegistry::with_builtin();
    // Room for about two frames, so reads hit both cache and disk.
    registry.set_cache_budget(2 * sequential[0].approx_bytes() + 1);
    let traj = registry.open(file.path()).unwrap();
    assert_eq!(traj.frame_count(), 10);

    let mut rng = StdRng::seed_from_u64(11);
    let mut orders: Vec<Vec<usize>> = vec![(0..10).collect(), (0..10).rev().collect()];
    for _ in 0..200 {
        let mut p: Vec<usize> = (0..10).collect();
        p.shuffle(&mut rng);
        orders.push(p);
    }
    for order in orders {
        for k in order {
            assert_eq!(*traj.load_frame(k).unwrap(), sequential[k]);
        }
    }
    assert!(traj.cached_frames() <= 2);
    assert_eq!(*open_trajectory(file.path()).unwrap().load_frame(9).unwrap(), sequential[9]);
}

pub fn ssv_header_exposes_attribute_columns() {
    let spec = ColumnSpec::parse("el x y z rotx pot").unwrap();
    assert_eq!(spec.attribute_names(), vec!["rotx", "pot"]);
}
