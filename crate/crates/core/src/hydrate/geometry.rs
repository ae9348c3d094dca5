//! Guest pairing and cone-constrained water selection.

use crate::cluster::list_neighbors;
use crate::model::{minimum_image, norm, PeriodicCell};
use crate::nodes::NodeError;

pub const DEFAULT_GUEST_CUTOFF: f64 = 9.0;
pub const DEFAULT_CONE_ANGLE: f64 = 45.0;

pub fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Angle between two vectors in radians, stable near 0 and π.
pub fn angle(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    norm(&cross(a, b)).atan2(dot(a, b))
}

/// Guest pairs within `cutoff` (inclusive), as sorted atom-index pairs.
pub fn filter_guests(
    positions: &[[f64; 3]],
    atoms: &[usize],
    cell: &PeriodicCell,
    cutoff: f64,
) -> Result<Vec<(usize, usize)>, NodeError> {
    let nl = list_neighbors(positions, cell, cutoff)?;
    let mut pairs: Vec<(usize, usize)> = nl
        .pairs()
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = (atoms[i], atoms[j]);
            (a.min(b), a.max(b))
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cone {
    /// Half-angle in degrees, in (0, 90).
    pub angle: f64,
    /// Optional bound on the guest-to-water distance.
    pub max_distance: Option<f64>,
}

impl Default for Cone {
    fn default() -> Self {
        Self {
            angle: DEFAULT_CONE_ANGLE,
            max_distance: None,
        }
    }
}

impl Cone {
    /// Whether `w` lies in both cones around the `g1`-`g2` axis.
    pub fn contains(&self, cell: &PeriodicCell, g1: &[f64; 3], g2: &[f64; 3], w: &[f64; 3]) -> bool {
        let limit = self.angle.to_radians();
        let axis = minimum_image(sub(g2, g1), cell);
        let back = axis.map(|v| -v);
        let from1 = minimum_image(sub(w, g1), cell);
        let from2 = minimum_image(sub(w, g2), cell);
        let (d1, d2) = (norm(&from1), norm(&from2));
        if d1 == 0.0 || d2 == 0.0 || norm(&axis) == 0.0 {
            return false;
        }
        if let Some(max) = self.max_distance {
            if d1 > max || d2 > max {
                return false;
            }
        }
        angle(&axis, &from1) <= limit && angle(&back, &from2) <= limit
    }
}

/// For every guest pair, the waters inside its double cone (ascending).
pub fn filter_waters(
    pairs: &[(usize, usize)],
    positions: &[[f64; 3]],
    waters: &[usize],
    cell: &PeriodicCell,
    cone: &Cone,
) -> Vec<Vec<usize>> {
    pairs
        .iter()
        .map(|&(g1, g2)| {
            let mut sel: Vec<usize> = waters
                .iter()
                .copied()
                .filter(|&w| cone.contains(cell, &positions[g1], &positions[g2], &positions[w]))
                .collect();
            sel.sort_unstable();
            sel.dedup();
            sel
        })
        .collect()
}
