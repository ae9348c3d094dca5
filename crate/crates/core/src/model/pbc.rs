use thiserror::Error;

use super::SimBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("triclinic simulation boxes are not supported by cutoff-based operations")]
pub struct TriclinicUnsupported;

/// Orthorhombic periodic cell used for minimum-image displacements.
///
/// Edge lengths in non-periodic directions are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicCell {
    pub lengths: [f64; 3],
    pub periodic: [bool; 3],
}

impl PeriodicCell {
    pub fn new(lengths: [f64; 3], periodic: [bool; 3]) -> Self {
        Self { lengths, periodic }
    }

    pub fn cubic(edge: f64) -> Self {
        Self::new([edge; 3], [true; 3])
    }

    pub fn open() -> Self {
        Self::new([0.0; 3], [false; 3])
    }

    pub fn from_box(sim_box: &SimBox) -> Result<Self, TriclinicUnsupported> {
        if !sim_box.is_orthorhombic() {
            return Err(TriclinicUnsupported);
        }
        let m = &sim_box.matrix;
        Ok(Self::new([m[0][0], m[1][1], m[2][2]], sim_box.periodic))
    }

    pub fn displacement(&self, from: &[f64; 3], to: &[f64; 3]) -> [f64; 3] {
        minimum_image(
            [to[0] - from[0], to[1] - from[1], to[2] - from[2]],
            self,
        )
    }
}

/// Wraps every periodic component of `delta` into `[-L/2, L/2)`.
pub fn minimum_image(delta: [f64; 3], cell: &PeriodicCell) -> [f64; 3] {
    let mut out = delta;
    for axis in 0..3 {
        let edge = cell.lengths[axis];
        if !cell.periodic[axis] || edge <= 0.0 {
            continue;
        }
        let half = 0.5 * edge;
        let mut d = delta[axis] - edge * (delta[axis] / edge + 0.5).floor();
        // rounding can land exactly on the excluded upper bound
        if d >= half {
            d -= edge;
        }
        if d < -half {
            d += edge;
        }
        out[axis] = d;
    }
    out
}

pub fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn distance(cell: &PeriodicCell, a: &[f64; 3], b: &[f64; 3]) -> f64 {
    norm(&cell.displacement(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wraps_across_boundary() {
        let cell = PeriodicCell::cubic(100.0);
        assert_eq!(minimum_image([99.0, 0.0, 0.0], &cell), [-1.0, 0.0, 0.0]);
    }

    #[test]
    fn small_delta_unchanged() {
        let cell = PeriodicCell::cubic(100.0);
        assert_eq!(minimum_image([0.3, 0.3, 0.3], &cell), [0.3, 0.3, 0.3]);
    }

    #[test]
    fn half_box_is_lower_inclusive() {
        let cell = PeriodicCell::cubic(100.0);
        assert_eq!(minimum_image([50.0, 0.0, 0.0], &cell), [-50.0, 0.0, 0.0]);
        assert_eq!(minimum_image([-50.0, 0.0, 0.0], &cell), [-50.0, 0.0, 0.0]);
    }

    #[test]
    fn non_periodic_axis_untouched() {
        let cell = PeriodicCell::new([10.0; 3], [true, false, true]);
        assert_eq!(minimum_image([9.0, 9.0, 9.0], &cell), [-1.0, 9.0, -1.0]);
    }

    #[test]
    fn triclinic_rejected() {
        let mut b = SimBox::orthorhombic([10.0; 3]);
        b.matrix[1][0] = 2.0;
        assert_eq!(PeriodicCell::from_box(&b), Err(TriclinicUnsupported));
    }

    proptest! {
        #[test]
        fn wrap_is_shorter_and_idempotent(
            d in prop::array::uniform3(-1000.0f64..1000.0),
            edge in 0.5f64..200.0,
        ) {
            let cell = PeriodicCell::cubic(edge);
            let once = minimum_image(d, &cell);
            for axis in 0..3 {
                prop_assert!(once[axis].abs() <= d[axis].abs() + 1e-9);
                prop_assert!(once[axis] >= -edge / 2.0 && once[axis] < edge / 2.0);
            }
            prop_assert_eq!(minimum_image(once, &cell), once);
        }
    }
}
