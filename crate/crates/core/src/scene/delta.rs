use std::collections::{BTreeMap, BTreeSet};

/// A single scene mutation emitted by a node.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneOp {
    SetColors(Vec<(usize, [f64; 4])>),
    SetRadiusScales(Vec<(usize, f64)>),
    /// Atoms failing a visibility filter.
    Hide(Vec<usize>),
    ExtraBonds(Vec<(usize, usize)>),
    CameraCenter([f64; 3]),
}

/// Accumulated scene changes for one frame.
///
/// Colors, radius scales and the camera center are last-write-wins.
/// Visibility is AND-composed: an atom hidden by any filter stays hidden.
/// Extra bonds are unordered pairs stored as `(min, max)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneDelta {
    pub colors: BTreeMap<usize, [f64; 4]>,
    pub radius_scales: BTreeMap<usize, f64>,
    pub hidden: BTreeSet<usize>,
    pub extra_bonds: BTreeSet<(usize, usize)>,
    pub camera_center: Option<[f64; 3]>,
}

impl SceneDelta {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&mut self, op: &SceneOp) {
        match op {
            SceneOp::SetColors(entries) => self.colors.extend(entries.iter().copied()),
            SceneOp::SetRadiusScales(entries) => self.radius_scales.extend(entries.iter().copied()),
            SceneOp::Hide(atoms) => self.hidden.extend(atoms.iter().copied()),
            SceneOp::ExtraBonds(pairs) => self
                .extra_bonds
                .extend(pairs.iter().map(|&(i, j)| (i.min(j), i.max(j)))),
            SceneOp::CameraCenter(c) => self.camera_center = Some(*c),
        }
    }

    /// Applies every change in `other` on top of `self`.
    pub fn merge(&mut self, other: &SceneDelta) {
        self.colors.extend(other.colors.iter().map(|(k, v)| (*k, *v)));
        self.radius_scales.extend(other.radius_scales.iter().map(|(k, v)| (*k, *v)));
        self.hidden.extend(other.hidden.iter().copied());
        self.extra_bonds.extend(other.extra_bonds.iter().copied());
        if other.camera_center.is_some() {
            self.camera_center = other.camera_center;
        }
    }

    pub fn is_visible(&self, atom: usize) -> bool {
        !self.hidden.contains(&atom)
    }
}
