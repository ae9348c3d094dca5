//! Covalent O-H assignment, geometric hydrogen bonds and O-O rebonding.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::geometry::{angle, sub};
use crate::cluster::list_neighbors;
use crate::model::{minimum_image, norm, Frame, PeriodicCell};
use crate::nodes::NodeError;

pub const DEFAULT_R_MAX: f64 = 3.5;
pub const DEFAULT_THETA_MIN: f64 = 150.0;
pub const DEFAULT_COVALENT_CUTOFF: f64 = 1.25;

/// Hydrogen atom index to the oxygen it is covalently bound to.
pub type CovalentMap = BTreeMap<usize, usize>;

/// Assigns every hydrogen to one oxygen.
///
/// Explicit bonds win, then the nearest oxygen sharing a positive residue
/// id, then the nearest oxygen within `cutoff`.
pub fn covalent_map(
    frame: &Frame,
    cell: &PeriodicCell,
    oxygens: &[usize],
    hydrogens: &[usize],
    cutoff: f64,
) -> Result<CovalentMap, NodeError> {
    let is_o: HashSet<usize> = oxygens.iter().copied().collect();
    let is_h: HashSet<usize> = hydrogens.iter().copied().collect();
    let pos = &frame.positions;
    let mut map = CovalentMap::new();

    for &(a, b) in &frame.bonds {
        for (h, o) in [(a, b), (b, a)] {
            if is_o.contains(&o) && is_h.contains(&h) {
                map.entry(h).or_insert(o);
            }
        }
    }

    let res = &frame.residue_ids;
    let mut by_residue: HashMap<i64, Vec<usize>> = HashMap::new();
    for &o in oxygens {
        if res[o] > 0 {
            by_residue.entry(res[o]).or_default().push(o);
        }
    }
    let nearest = |h: usize, cands: &mut dyn Iterator<Item = usize>| -> Option<(f64, usize)> {
        cands
            .map(|o| (norm(&minimum_image(sub(&pos[o], &pos[h]), cell)), o))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
    };
    for &h in hydrogens {
        if map.contains_key(&h) || res[h] <= 0 {
            continue;
        }
        if let Some(cands) = by_residue.get(&res[h]) {
            if let Some((_, o)) = nearest(h, &mut cands.iter().copied()) {
                map.insert(h, o);
            }
        }
    }

    let rest: Vec<usize> = hydrogens.iter().copied().filter(|h| !map.contains_key(h)).collect();
    if rest.is_empty() {
        return Ok(map);
    }
    let mut atoms: Vec<usize> = rest.clone();
    atoms.extend_from_slice(oxygens);
    let sub_pos: Vec<[f64; 3]> = atoms.iter().map(|&i| pos[i]).collect();
    let nl = list_neighbors(&sub_pos, cell, cutoff)?;
    for (local, &h) in rest.iter().enumerate() {
        let cands = nl.row(local).iter().filter(|&&j| j >= rest.len()).map(|&j| atoms[j]);
        match nearest(h, &mut cands.into_iter()) {
            Some((_, o)) => {
                map.insert(h, o);
            }
            None => return Err(NodeError::OrphanHydrogen { atom: h }),
        }
    }
    Ok(map)
}

/// Donor geometry test for O-H···O'.
pub fn is_hbond(cell: &PeriodicCell, o: &[f64; 3], h: &[f64; 3], acceptor: &[f64; 3], r_max: f64, theta_min: f64) -> bool {
    let oo = minimum_image(sub(acceptor, o), cell);
    if norm(&oo) > r_max {
        return false;
    }
    let h_o = minimum_image(sub(o, h), cell);
    let h_a = minimum_image(sub(acceptor, h), cell);
    if norm(&h_o) == 0.0 || norm(&h_a) == 0.0 {
        return false;
    }
    angle(&h_o, &h_a) >= theta_min.to_radians()
}

/// Hydrogen bonds among the selected oxygens, as sorted `(H, O')` edges.
pub fn hbonds_filtered(
    selected: &[usize],
    positions: &[[f64; 3]],
    map: &CovalentMap,
    cell: &PeriodicCell,
    r_max: f64,
    theta_min: f64,
) -> Result<Vec<(usize, usize)>, NodeError> {
    let mut sel: Vec<usize> = selected.to_vec();
    sel.sort_unstable();
    sel.dedup();
    let local: HashMap<usize, usize> = sel.iter().enumerate().map(|(i, &o)| (o, i)).collect();
    let sel_pos: Vec<[f64; 3]> = sel.iter().map(|&o| positions[o]).collect();
    let nl = list_neighbors(&sel_pos, cell, r_max)?;

    let mut edges = Vec::new();
    for (&h, &o) in map {
        let Some(&li) = local.get(&o) else { continue };
        for &lj in nl.row(li) {
            let acc = sel[lj];
            if is_hbond(cell, &positions[o], &positions[h], &positions[acc], r_max, theta_min) {
                edges.push((h, acc));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

/// Maps `(H, O')` edges to deduplicated unordered `(O, O')` edges.
pub fn reconnect_water(edges: &[(usize, usize)], map: &CovalentMap) -> Result<Vec<(usize, usize)>, NodeError> {
    let mut out = Vec::with_capacity(edges.len());
    for &(h, acc) in edges {
        let o = *map.get(&h).ok_or(NodeError::OrphanHydrogen { atom: h })?;
        if o != acc {
            out.push((o.min(acc), o.max(acc)));
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
