//! Cutoff neighbor search with cell lists.

use crate::model::{minimum_image, PeriodicCell};
use crate::nodes::NodeError;

/// Below this size a box that is too small for cell lists is searched by
/// brute force instead of being rejected.
pub const BRUTE_FORCE_LIMIT: usize = 5000;

/// Symmetric neighbor lists in CSR layout, each row sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborList {
    pub offsets: Vec<usize>,
    pub neighbors: Vec<usize>,
}

impl NeighborList {
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j) in pairs {
            rows[i].push(j);
            rows[j].push(i);
        }
        Self::from_rows(rows)
    }

    pub fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            neighbors.extend_from_slice(row);
            offsets.push(neighbors.len());
        }
        Self { offsets, neighbors }
    }

    pub fn atom_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Unordered pairs `(i, j)` with `i < j`, sorted.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.atom_count())
            .flat_map(|i| self.row(i).iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }
}

fn within(cell: &PeriodicCell, a: &[f64; 3], b: &[f64; 3], cutoff_sq: f64) -> bool {
    let d = minimum_image([b[0] - a[0], b[1] - a[1], b[2] - a[2]], cell);
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= cutoff_sq
}

/// All pairs within `cutoff` by the O(N²) double loop.
pub fn brute_force_pairs(positions: &[[f64; 3]], cell: &PeriodicCell, cutoff: f64) -> Vec<(usize, usize)> {
    let c2 = cutoff * cutoff;
    let mut out = Vec::new();
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if within(cell, &positions[i], &positions[j], c2) {
                out.push((i, j));
            }
        }
    }
    out
}

struct Grid {
    counts: [usize; 3],
    origin: [f64; 3],
    edge: [f64; 3],
    periodic: [bool; 3],
    lengths: [f64; 3],
}

impl Grid {
    fn build(positions: &[[f64; 3]], cell: &PeriodicCell, cutoff: f64) -> Self {
        let mut counts = [1usize; 3];
        let mut origin = [0.0; 3];
        let mut span = [0.0; 3];
        for k in 0..3 {
            if cell.periodic[k] {
                span[k] = cell.lengths[k];
            } else {
                let (lo, hi) = positions
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
                origin[k] = lo;
                span[k] = (hi - lo).max(0.0);
            }
            counts[k] = ((span[k] / cutoff).floor() as usize).max(1);
        }
        // Keep the cell count proportional to the atom count.
        let budget = 4 * positions.len() + 64;
        while counts.iter().product::<usize>() > budget {
            let k = (0..3).max_by_key(|&k| counts[k]).unwrap();
            counts[k] = counts[k].div_ceil(2);
        }
        let edge = [0, 1, 2].map(|k| if span[k] > 0.0 { span[k] / counts[k] as f64 } else { 1.0 });
        Grid {
            counts,
            origin,
            edge,
            periodic: cell.periodic,
            lengths: cell.lengths,
        }
    }

    fn coord(&self, p: &[f64; 3]) -> [usize; 3] {
        [0, 1, 2].map(|k| {
            let x = if self.periodic[k] {
                p[k].rem_euclid(self.lengths[k])
            } else {
                p[k] - self.origin[k]
            };
            ((x / self.edge[k]).floor().max(0.0) as usize).min(self.counts[k] - 1)
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[0] * self.counts[1] + c[1]) * self.counts[2] + c[2]
    }

    /// Distinct cells adjacent to `c`, including `c`.
    fn around(&self, c: [usize; 3]) -> Vec<usize> {
        let axis = |k: usize| -> Vec<usize> {
            let n = self.counts[k] as i64;
            let mut v: Vec<usize> = (-1i64..=1)
                .filter_map(|d| {
                    let x = c[k] as i64 + d;
                    if self.periodic[k] {
                        Some(x.rem_euclid(n) as usize)
                    } else {
                        (0..n).contains(&x).then_some(x as usize)
                    }
                })
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let (xs, ys, zs) = (axis(0), axis(1), axis(2));
        let mut out = Vec::with_capacity(27);
        for &x in &xs {
            for &y in &ys {
                for &z in &zs {
                    out.push(self.flat([x, y, z]));
                }
            }
        }
        out
    }
}

/// Neighbor lists for every pair within `cutoff` under the minimum image.
pub fn list_neighbors(positions: &[[f64; 3]], cell: &PeriodicCell, cutoff: f64) -> Result<NeighborList, NodeError> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(NodeError::Invalid(format!("cutoff must be positive, got {cutoff}")));
    }
    if positions.iter().flatten().any(|v| !v.is_finite()) {
        return Err(NodeError::NonFinite);
    }
    let n = positions.len();
    let too_small = (0..3).find(|&k| cell.periodic[k] && cell.lengths[k] < 2.0 * cutoff);
    if let Some(k) = too_small {
        if n >= BRUTE_FORCE_LIMIT {
            return Err(NodeError::BoxTooSmall {
                edge: cell.lengths[k],
                cutoff,
            });
        }
        return Ok(NeighborList::from_pairs(n, &brute_force_pairs(positions, cell, cutoff)));
    }

    let grid = Grid::build(positions, cell, cutoff);
    let ncells = grid.counts.iter().product::<usize>();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ncells];
    let coords: Vec<[usize; 3]> = positions.iter().map(|p| grid.coord(p)).collect();
    for (i, c) in coords.iter().enumerate() {
        members[grid.flat(*c)].push(i);
    }
    let c2 = cutoff * cutoff;
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut around_cache: Vec<Option<Vec<usize>>> = vec![None; ncells];
    for (i, c) in coords.iter().enumerate() {
        let f = grid.flat(*c);
        let around = around_cache[f].get_or_insert_with(|| grid.around(*c));
        for &cell_idx in around.iter() {
            for &j in &members[cell_idx] {
                if j != i && within(cell, &positions[i], &positions[j], c2) {
                    rows[i].push(j);
                }
            }
        }
    }
    Ok(NeighborList::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn close_pair() {
        let nl = list_neighbors(&[[0.0; 3], [1.0, 0.0, 0.0]], &PeriodicCell::cubic(100.0), 1.5).unwrap();
        assert_eq!(nl.row(0), &[1]);
        assert_eq!(nl.row(1), &[0]);
    }

    #[test]
    fn pair_across_boundary() {
        let nl = list_neighbors(&[[0.5, 0.0, 0.0], [99.5, 0.0, 0.0]], &PeriodicCell::cubic(100.0), 1.5).unwrap();
        assert_eq!(nl.pairs(), vec![(0, 1)]);
    }

    #[test]
    fn open_box_does_not_wrap() {
        let nl = list_neighbors(&[[0.5, 0.0, 0.0], [99.5, 0.0, 0.0]], &PeriodicCell::open(), 1.5).unwrap();
        assert!(nl.pairs().is_empty());
    }

    #[test]
    fn small_box_falls_back_or_errors() {
        let cell = PeriodicCell::cubic(2.0);
        let nl = list_neighbors(&[[0.0; 3], [1.9, 0.0, 0.0]], &cell, 1.5).unwrap();
        assert_eq!(nl.pairs(), vec![(0, 1)]);
        let many = vec![[0.0; 3]; BRUTE_FORCE_LIMIT];
        assert!(matches!(list_neighbors(&many, &cell, 1.5), Err(NodeError::BoxTooSmall { .. })));
    }

    #[test]
    fn matches_brute_force_with_two_cells_per_axis() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let cell = PeriodicCell::cubic(6.5);
        let pos: Vec<[f64; 3]> = (0..120).map(|_| [0, 1, 2].map(|_| rng.gen_range(-3.0..10.0))).collect();
        let nl = list_neighbors(&pos, &cell, 3.0).unwrap();
        assert_eq!(nl.pairs(), brute_force_pairs(&pos, &cell, 3.0));
    }

    #[test]
    fn rows_are_sorted_and_symmetric() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let cell = PeriodicCell::new([20.0, 15.0, 30.0], [true, true, false]);
        let pos: Vec<[f64; 3]> = (0..300).map(|_| [rng.gen_range(0.0..20.0), rng.gen_range(0.0..15.0), rng.gen_range(0.0..30.0)]).collect();
        let nl = list_neighbors(&pos, &cell, 2.5).unwrap();
        for i in 0..pos.len() {
            assert!(nl.row(i).windows(2).all(|w| w[0] < w[1]));
            for &j in nl.row(i) {
                assert!(nl.row(j).contains(&i));
                assert_ne!(i, j);
            }
        }
        assert_eq!(nl.pairs(), brute_force_pairs(&pos, &cell, 2.5));
    }
}
