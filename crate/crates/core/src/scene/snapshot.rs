use std::collections::{BTreeSet, HashMap};
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SceneDelta;
use crate::model::Frame;

pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;

const ELEMENT_COLORS: &str = include_str!("../../data/element_colors.json");

#[derive(Debug, Clone, Deserialize)]
struct ColorTable {
    fallback: [f64; 4],
    colors: HashMap<String, [f64; 4]>,
}

/// Base appearance applied before a frame's delta.
#[derive(Debug, Clone)]
pub struct SceneDefaults {
    colors: HashMap<String, [f64; 4]>,
    fallback: [f64; 4],
    pub radius: f64,
}

impl Default for SceneDefaults {
    fn default() -> Self {
        Self::from_json(ELEMENT_COLORS).expect("bundled color table is valid")
    }
}

impl SceneDefaults {
    /// Loads a color table of the form `{"fallback": rgba, "colors": {element: rgba}}`.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let table: ColorTable = serde_json::from_str(text)?;
        Ok(Self {
            colors: table.colors,
            fallback: table.fallback,
            radius: 1.0,
        })
    }

    /// Color for an atom type such as `OW`, `HW1`, `Cl` or `CH4`.
    pub fn color_for(&self, atom_type: &str) -> [f64; 4] {
        if let Some(c) = self.colors.get(atom_type) {
            return *c;
        }
        let letters: String = atom_type.chars().filter(|c| c.is_ascii_alphabetic()).collect();
        let mut chars = letters.chars();
        let first = match chars.next() {
            Some(c) => c.to_ascii_uppercase(),
            None => return self.fallback,
        };
        if let Some(second) = chars.next() {
            let two = format!("{first}{}", second.to_ascii_lowercase());
            if let Some(c) = self.colors.get(&two) {
                return *c;
            }
        }
        self.colors
            .get(&first.to_string())
            .copied()
            .unwrap_or(self.fallback)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomView {
    #[serde(rename = "type")]
    pub atom_type: String,
    pub position: [f64; 3],
    pub rgba: [f64; 4],
    pub radius: f64,
    pub visible: bool,
}

/// Fully resolved scene for one frame.
///
/// Hidden atoms are kept with `visible: false`; viewers decide how to draw them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSnapshot {
    pub schema: u32,
    pub frame: usize,
    /// `false` when no delta was committed and defaults were used.
    pub has_delta: bool,
    pub camera_center: Option<[f64; 3]>,
    pub atoms: Vec<AtomView>,
    pub bonds: Vec<[usize; 2]>,
}

impl SceneSnapshot {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("snapshot serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn resolve_scene(
    frame_index: usize,
    frame: &Frame,
    defaults: &SceneDefaults,
    delta: Option<&SceneDelta>,
) -> SceneSnapshot {
    let empty = SceneDelta::default();
    let d = delta.unwrap_or(&empty);
    let atoms = (0..frame.atom_count())
        .map(|i| AtomView {
            atom_type: frame.atom_types[i].clone(),
            position: frame.positions[i],
            rgba: d
                .colors
                .get(&i)
                .copied()
                .unwrap_or_else(|| defaults.color_for(&frame.atom_types[i])),
            radius: defaults.radius * d.radius_scales.get(&i).copied().unwrap_or(1.0),
            visible: d.is_visible(i),
        })
        .collect();
    let bonds: BTreeSet<(usize, usize)> = frame
        .bonds
        .iter()
        .copied()
        .chain(d.extra_bonds.iter().copied())
        .collect();
    SceneSnapshot {
        schema: SNAPSHOT_SCHEMA_VERSION,
        frame: frame_index,
        has_delta: delta.is_some(),
        camera_center: d.camera_center,
        atoms,
        bonds: bonds.into_iter().map(|(i, j)| [i, j]).collect(),
    }
}

pub fn export_snapshot(snapshot: &SceneSnapshot, path: &Path) -> io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(snapshot.to_json().as_bytes())
}
