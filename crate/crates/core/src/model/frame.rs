use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("per-atom field `{field}` has {actual} entries, expected {expected}")]
    FieldLength {
        field: String,
        expected: usize,
        actual: usize,
    },
    #[error("bond ({0}, {1}) references an atom out of range")]
    BondOutOfRange(usize, usize),
    #[error("bond ({0}, {0}) connects an atom to itself")]
    SelfBond(usize),
    #[error("periodic box edge {axis} must be positive, got {length}")]
    BadBox { axis: usize, length: f64 },
}

/// Simulation cell. Rows of `matrix` are the box vectors in Å.
#[derive(Debug, Clone, PartialEq)]
pub struct SimBox {
    pub matrix: [[f64; 3]; 3],
    pub periodic: [bool; 3],
}

impl SimBox {
    pub fn orthorhombic(lengths: [f64; 3]) -> Self {
        let mut matrix = [[0.0; 3]; 3];
        for axis in 0..3 {
            matrix[axis][axis] = lengths[axis];
        }
        let periodic = [lengths[0] > 0.0, lengths[1] > 0.0, lengths[2] > 0.0];
        Self { matrix, periodic }
    }

    /// A box with no periodicity in any direction.
    pub fn open() -> Self {
        Self {
            matrix: [[0.0; 3]; 3],
            periodic: [false; 3],
        }
    }

    pub fn is_orthorhombic(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| i == j || self.matrix[i][j] == 0.0))
    }

    pub fn lengths(&self) -> [f64; 3] {
        [self.matrix[0][0], self.matrix[1][1], self.matrix[2][2]]
    }

    fn validate(&self) -> Result<(), FrameError> {
        for axis in 0..3 {
            if self.periodic[axis] && !(self.matrix[axis][axis] > 0.0) {
                return Err(FrameError::BadBox {
                    axis,
                    length: self.matrix[axis][axis],
                });
            }
        }
        Ok(())
    }
}

/// One snapshot of the system.
///
/// Bonds are stored as unordered pairs normalized to `(min, max)` without
/// duplicates. `attributes` holds per-atom columns supplied by the importer.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub positions: Vec<[f64; 3]>,
    pub atom_types: Vec<String>,
    pub residue_ids: Vec<i64>,
    pub sim_box: SimBox,
    pub bonds: Vec<(usize, usize)>,
    pub attributes: BTreeMap<String, Vec<f64>>,
}

impl Frame {
    pub fn new(
        positions: Vec<[f64; 3]>,
        atom_types: Vec<String>,
        residue_ids: Vec<i64>,
        sim_box: SimBox,
        bonds: Vec<(usize, usize)>,
        attributes: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self, FrameError> {
        let n = positions.len();
        let check = |field: &str, actual: usize| {
            if actual == n {
                Ok(())
            } else {
                Err(FrameError::FieldLength {
                    field: field.to_string(),
                    expected: n,
                    actual,
                })
            }
        };
        check("atom_types", atom_types.len())?;
        check("residue_ids", residue_ids.len())?;
        for (name, values) in &attributes {
            check(name, values.len())?;
        }
        sim_box.validate()?;

        let mut seen = HashSet::with_capacity(bonds.len());
        let mut normalized = Vec::with_capacity(bonds.len());
        for (i, j) in bonds {
            if i >= n || j >= n {
                return Err(FrameError::BondOutOfRange(i, j));
            }
            if i == j {
                return Err(FrameError::SelfBond(i));
            }
            let pair = (i.min(j), i.max(j));
            if seen.insert(pair) {
                normalized.push(pair);
            }
        }

        Ok(Self {
            positions,
            atom_types,
            residue_ids,
            sim_box,
            bonds: normalized,
            attributes,
        })
    }

    /// Frame holding only coordinates; types default to `X`.
    pub fn from_positions(positions: Vec<[f64; 3]>, sim_box: SimBox) -> Result<Self, FrameError> {
        let n = positions.len();
        Self::new(
            positions,
            vec!["X".to_string(); n],
            vec![0; n],
            sim_box,
            Vec::new(),
            BTreeMap::new(),
        )
    }

    pub fn atom_count(&self) -> usize {
        self.positions.len()
    }

    /// Rough heap footprint used by the frame cache budget.
    pub fn approx_bytes(&self) -> usize {
        let n = self.atom_count();
        let types: usize = self.atom_types.iter().map(|t| t.len() + 24).sum();
        n * (24 + 8) + types + self.bonds.len() * 16 + self.attributes.len() * n * 8 + 256
    }

    /// Indices of atoms whose type is in `types`.
    pub fn select_types<S: AsRef<str>>(&self, types: &[S]) -> Vec<usize> {
        self.atom_types
            .iter()
            .enumerate()
            .filter(|(_, t)| types.iter().any(|s| s.as_ref() == t.as_str()))
            .map(|(i, _)| i)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos(n: usize) -> Vec<[f64; 3]> {
        (0..n).map(|i| [i as f64, 0.0, 0.0]).collect()
    }

    #[test]
    fn bonds_are_normalized_and_deduplicated() {
        let mut f = Frame::from_positions(pos(3), SimBox::open()).unwrap();
        f = Frame::new(
            f.positions,
            f.atom_types,
            f.residue_ids,
            f.sim_box,
            vec![(1, 0), (0, 1), (2, 1)],
            BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(f.bonds, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn rejects_bad_bonds() {
        let mk = |bonds| {
            Frame::new(
                pos(2),
                vec!["X".into(); 2],
                vec![0; 2],
                SimBox::open(),
                bonds,
                BTreeMap::new(),
            )
        };
        assert_eq!(mk(vec![(0, 2)]), Err(FrameError::BondOutOfRange(0, 2)));
        assert_eq!(mk(vec![(1, 1)]), Err(FrameError::SelfBond(1)));
    }

    #[test]
    fn periodic_box_needs_positive_edges() {
        let mut b = SimBox::orthorhombic([10.0, 10.0, 10.0]);
        b.matrix[2][2] = 0.0;
        assert!(matches!(
            Frame::from_positions(pos(1), b),
            Err(FrameError::BadBox { axis: 2, .. })
        ));
    }
}
