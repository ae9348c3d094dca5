//! Synthetic trajectories and graphs with known answers.
//!
//! Shared by the integration tests, the acceptance suite and the CLI's
//! examples. Every fixture is built from closed-form geometry so the
//! expected results can be stated without running the engine.

use std::f64::consts::PI;

use crate::io::{write_ssv, ColumnSpec};
use crate::model::{Frame, SimBox, Trajectory};

/// Oxygen ring radius of a cage unit.
pub const CAGE_RADIUS: f64 = 2.4;
/// Distance of each guest from the ring plane.
pub const GUEST_OFFSET: f64 = 4.0;
pub const OH_LENGTH: f64 = 0.96;
/// Atoms per cage unit: two guests plus five waters.
pub const CAGE_ATOMS: usize = 17;

pub const HYDRATE_BOX: f64 = 30.0;
pub const HYDRATE_FRAMES: usize = 20;

/// One cage unit: guests `C` on the x axis at `center ± GUEST_OFFSET` and a
/// pentagon of waters in the bisecting plane.
///
/// With `bonded`, the first hydrogen of water `i` points straight at oxygen
/// `i + 1`, closing a hydrogen-bonded five-ring. Otherwise it points along
/// the x axis and no bond forms. The second hydrogen always points radially
/// outward.
pub fn cage_atoms(center: [f64; 3], bonded: bool) -> Vec<(&'static str, [f64; 3])> {
    let [cx, cy, cz] = center;
    let mut atoms = vec![("C", [cx - GUEST_OFFSET, cy, cz]), ("C", [cx + GUEST_OFFSET, cy, cz])];
    let oxygen = |i: usize| {
        let phi = 2.0 * PI * (i % 5) as f64 / 5.0;
        [cx, cy + CAGE_RADIUS * phi.cos(), cz + CAGE_RADIUS * phi.sin()]
    };
    for i in 0..5 {
        let o = oxygen(i);
        let toward = if bonded {
            let next = oxygen(i + 1);
            let d = [next[0] - o[0], next[1] - o[1], next[2] - o[2]];
            let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            [d[0] / len, d[1] / len, d[2] / len]
        } else {
            [1.0, 0.0, 0.0]
        };
        let radial = [0.0, (o[1] - cy) / CAGE_RADIUS, (o[2] - cz) / CAGE_RADIUS];
        atoms.push(("OW", o));
        atoms.push(("HW1", add_scaled(o, toward, OH_LENGTH)));
        atoms.push(("HW2", add_scaled(o, radial, OH_LENGTH)));
    }
    atoms
}

fn add_scaled(a: [f64; 3], d: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] + s * d[0], a[1] + s * d[1], a[2] + s * d[2]]
}

fn frame_of(atoms: Vec<(&'static str, [f64; 3])>, sim_box: SimBox) -> Frame {
    let (types, positions): (Vec<_>, Vec<_>) = atoms.into_iter().unzip();
    let mut f = Frame::from_positions(positions, sim_box).expect("fixture positions are finite");
    f.atom_types = types.into_iter().map(str::to_string).collect();
    f
}

/// A single bonded cage unit in a periodic box.
pub fn cage_frame() -> Frame {
    let c = HYDRATE_BOX / 2.0;
    frame_of(cage_atoms([c, c, c], true), SimBox::orthorhombic([HYDRATE_BOX; 3]))
}

/// Centers of the two cage units of [`hydrate_frames`].
pub const UNIT_CENTERS: [[f64; 3]; 2] = [[7.5, 7.5, 7.5], [22.5, 22.5, 22.5]];

/// Twenty frames with two cage units. Unit A closes at frame 10 and unit B
/// at frame 15; each frame is also shifted rigidly along z.
pub fn hydrate_frames() -> Vec<Frame> {
    (0..HYDRATE_FRAMES)
        .map(|k| {
            let shift = 0.05 * k as f64;
            let mut atoms = Vec::with_capacity(2 * CAGE_ATOMS);
            for (u, c) in UNIT_CENTERS.iter().enumerate() {
                let bonded = k >= [10, 15][u];
                atoms.extend(cage_atoms([c[0], c[1], c[2] + shift], bonded));
            }
            frame_of(atoms, SimBox::orthorhombic([HYDRATE_BOX; 3]))
        })
        .collect()
}

/// The order parameter expected on each frame of [`hydrate_frames`].
pub fn hydrate_expected_mcg() -> Vec<f64> {
    (0..HYDRATE_FRAMES)
        .map(|k| match k {
            0..10 => 0.0,
            10..15 => 7.0,
            _ => 14.0,
        })
        .collect()
}

pub fn hydrate_ssv() -> String {
    ssv_text(&hydrate_frames())
}

pub fn hydrate_trajectory() -> Trajectory {
    Trajectory::from_frames(hydrate_frames(), "hydrate-fixture").expect("consistent fixture")
}

/// Canonical SSV text with only element and coordinate columns.
pub fn ssv_text(frames: &[Frame]) -> String {
    let spec = ColumnSpec::parse("el x y z").expect("static header");
    let mut out = Vec::new();
    write_ssv(&mut out, &spec, frames).expect("writing to memory");
    String::from_utf8(out).expect("ssv is utf-8")
}

/// Hydrate detection: guest pairs, cone waters, hydrogen bonds, five-rings,
/// labels and the per-frame order parameter.
pub const HYDRATE_GRAPH: &str = r#"{
  "nodes": [
    {"id": 1, "kind": "get_positions", "name": "guests", "params": {"types": ["C"]}},
    {"id": 2, "kind": "get_positions", "name": "waters", "params": {"types": ["OW"]}},
    {"id": 3, "kind": "filter_guests", "params": {"cutoff": 9.0}},
    {"id": 4, "kind": "filter_waters", "params": {"angle": 45.0}},
    {"id": 5, "kind": "hbonds_filtered", "params": {"r_max": 3.5, "theta_min": 150.0}},
    {"id": 6, "kind": "reconnect_water", "params": {}},
    {"id": 7, "kind": "find_links", "params": {"n": 5}},
    {"id": 8, "kind": "register_hydrate", "params": {"min_rings": 1}},
    {"id": 9, "kind": "set_attribute", "params": {"name": "mcg"}},
    {"id": 10, "kind": "mcg_order_parameter", "params": {}},
    {"id": 11, "kind": "plot_data", "name": "mcg", "params": {"mode": "lines_accumulate"}},
    {"id": 12, "kind": "extra_bonds", "params": {}}
  ],
  "connections": [
    {"from": "1.positions", "to": "3.positions"},
    {"from": "1.indices", "to": "3.indices"},
    {"from": "3.pairs", "to": "4.pairs"},
    {"from": "2.indices", "to": "4.waters"},
    {"from": "4.selected", "to": "5.selected"},
    {"from": "5.edges", "to": "6.edges"},
    {"from": "6.bonds", "to": "7.bonds"},
    {"from": "3.pairs", "to": "8.pairs"},
    {"from": "4.offsets", "to": "8.offsets"},
    {"from": "4.waters", "to": "8.waters"},
    {"from": "7.rings", "to": "8.rings"},
    {"from": "8.labels", "to": "9.values"},
    {"from": "8.labels", "to": "10.labels"},
    {"from": "10.value", "to": "11.value"},
    {"from": "6.bonds", "to": "12.pairs"}
  ]
}
"#;

/// Cluster tracking with a fading color channel.
///
/// The tracked label starts on the largest cluster of the first visited
/// frame and is carried through `tracked`; `channel` fades toward the label.
pub const TRACKING_GRAPH: &str = r#"{
  "nodes": [
    {"id": 1, "kind": "get_positions", "params": {}},
    {"id": 2, "kind": "list_neighbors", "params": {"cutoff": 1.5}},
    {"id": 3, "kind": "group_list", "params": {}},
    {"id": 4, "kind": "mode_mask", "params": {}},
    {"id": 5, "kind": "cast", "params": {"from": "i64", "to": "f64", "rank": 1}},
    {"id": 6, "kind": "get_attribute", "params": {"name": "tracked", "mode": "carry", "init": true}},
    {"id": 7, "kind": "track_cluster", "params": {"min_size": 2}},
    {"id": 8, "kind": "set_attribute", "params": {"name": "tracked"}},
    {"id": 9, "kind": "get_attribute", "params": {"name": "channel", "mode": "carry"}},
    {"id": 10, "kind": "labels2colors", "params": {"step": 0.25}},
    {"id": 11, "kind": "set_attribute", "params": {"name": "channel"}},
    {"id": 12, "kind": "channel_to_rgba", "params": {}},
    {"id": 13, "kind": "set_colors", "params": {}}
  ],
  "connections": [
    {"from": "1.positions", "to": "2.positions"},
    {"from": "2.offsets", "to": "3.offsets"},
    {"from": "2.neighbors", "to": "3.neighbors"},
    {"from": "3.ids", "to": "4.ids"},
    {"from": "4.mask", "to": "5.values"},
    {"from": "5.out", "to": "6.init"},
    {"from": "3.ids", "to": "7.ids"},
    {"from": "6.values", "to": "7.prev"},
    {"from": "7.labels", "to": "8.values"},
    {"from": "7.labels", "to": "10.labels"},
    {"from": "9.values", "to": "10.prev"},
    {"from": "10.channel", "to": "11.values"},
    {"from": "10.channel", "to": "12.channel"},
    {"from": "1.indices", "to": "13.indices"},
    {"from": "12.colors", "to": "13.colors"}
  ]
}
"#;

pub const CLUSTER_FRAMES: usize = 50;
/// Members of clusters A, B and C by atom index.
pub const CLUSTER_A: [usize; 6] = [0, 1, 2, 3, 4, 5];
pub const CLUSTER_B: [usize; 4] = [6, 7, 8, 9];
pub const CLUSTER_C: [usize; 3] = [10, 11, 12];

fn row(atoms: &[usize], x0: f64, y: f64, out: &mut [[f64; 3]]) {
    for (k, &a) in atoms.iter().enumerate() {
        out[a] = [x0 + k as f64, y, 0.0];
    }
}

/// Fifty frames of three chains (spacing 1.0, linked at a 1.5 cutoff) in
/// an open box.
///
/// * 0..15: A, B and C apart.
/// * 15..30: B attaches to the end of A.
/// * 30..40: the merged chain splits into `A[0..3] + B` and `A[3..6]`.
/// * 40..50: every atom is isolated.
pub fn cluster_frames() -> Vec<Frame> {
    (0..CLUSTER_FRAMES)
        .map(|k| {
            let mut pos = vec![[0.0; 3]; 13];
            match k {
                0..15 => {
                    row(&CLUSTER_A, 0.0, 0.0, &mut pos);
                    row(&CLUSTER_B, 0.0, 10.0, &mut pos);
                    row(&CLUSTER_C, 0.0, 20.0, &mut pos);
                }
                15..30 => {
                    row(&CLUSTER_A, 0.0, 0.0, &mut pos);
                    row(&CLUSTER_B, 6.0, 0.0, &mut pos);
                    row(&CLUSTER_C, 0.0, 20.0, &mut pos);
                }
                30..40 => {
                    row(&CLUSTER_A[..3], 0.0, 0.0, &mut pos);
                    row(&CLUSTER_B, 3.0, 0.0, &mut pos);
                    row(&CLUSTER_A[3..], 0.0, 5.0, &mut pos);
                    row(&CLUSTER_C, 0.0, 20.0, &mut pos);
                }
                _ => {
                    for (i, p) in pos.iter_mut().enumerate() {
                        *p = [3.0 * i as f64, 0.0, 0.0];
                    }
                }
            }
            // Small frame-dependent drift keeps frames distinct.
            let drift = 0.01 * k as f64;
            for p in &mut pos {
                p[2] += drift;
            }
            frame_of(pos.into_iter().map(|p| ("Ar", p)).collect(), SimBox::open())
        })
        .collect()
}

pub fn cluster_trajectory() -> Trajectory {
    Trajectory::from_frames(cluster_frames(), "cluster-fixture").expect("consistent fixture")
}

pub fn cluster_ssv() -> String {
    ssv_text(&cluster_frames())
}

/// The set of atoms the tracking graph should label on each forward frame.
pub fn cluster_expected_tracked() -> Vec<Vec<usize>> {
    (0..CLUSTER_FRAMES)
        .map(|k| match k {
            0..15 => CLUSTER_A.to_vec(),
            15..30 => CLUSTER_A.iter().chain(&CLUSTER_B).copied().collect(),
            30..40 => CLUSTER_A[..3].iter().chain(&CLUSTER_B).copied().collect(),
            _ => vec![],
        })
        .collect()
}
