//! Trajectory importers backed by an external host.
//!
//! Strings never travel as tensors, so the file path is sent in the EXEC
//! params. The host manifest must be:
//!
//! ```text
//! out frame_count : i64
//! out positions : f64 [2]
//! out box : f64 [1]
//! out elements : i64 [1]
//! ```
//!
//! EXEC with frame `k` returns frame `k`. `box` holds three orthorhombic
//! edge lengths (zero for a non-periodic axis) and `elements` holds atomic
//! numbers, 0 for unknown.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Deserialize;
use serde_json::{Map, Value};

use super::{HostOptions, Language, Manifest, NodeHandle, PortDecl, PortDirection};
use crate::io::{ImportError, Importer};
use crate::model::{Frame, FrameSource, SimBox};
use crate::tensor::{DType, Tensor};

const SYMBOLS: [&str; 37] = [
    "X", "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
];

pub fn element_symbol(z: i64) -> String {
    usize::try_from(z)
        .ok()
        .and_then(|z| SYMBOLS.get(z))
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("Z{z}"))
}

/// Interface every importer host must declare.
pub fn importer_manifest(name: &str) -> Manifest {
    let out = |n: &str, dtype, rank| PortDecl {
        direction: PortDirection::Out,
        name: n.into(),
        dtype,
        rank,
    };
    Manifest {
        name: name.into(),
        language: Language::Python,
        ports: vec![
            out("frame_count", DType::I64, 0),
            out("positions", DType::F64, 2),
            out("box", DType::F64, 1),
            out("elements", DType::I64, 1),
        ],
        stateful: false,
    }
}

/// Config entry for one external importer.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ExternalImporterConfig {
    pub name: String,
    pub extensions: Vec<String>,
    pub command: Vec<String>,
}

pub struct ExternalImporter {
    config: ExternalImporterConfig,
    options: HostOptions,
}

impl ExternalImporter {
    pub fn new(config: ExternalImporterConfig, options: HostOptions) -> Self {
        Self { config, options }
    }
}

impl Importer for ExternalImporter {
    fn name(&self) -> &str {
        &self.config.name
    }

    fn extensions(&self) -> Vec<String> {
        self.config.extensions.iter().map(|e| e.trim_start_matches('.').to_ascii_lowercase()).collect()
    }

    fn probe(&self, _head: &[u8]) -> bool {
        false
    }

    fn open(&self, path: &Path) -> Result<Box<dyn FrameSource>, ImportError> {
        let ext = |e: super::ScriptError| ImportError::External(format!("{}: {e}", self.config.name));
        let manifest = importer_manifest(&self.config.name);
        let handle = NodeHandle::spawn(&manifest, &self.config.command, self.options).map_err(ext)?;
        let mut source = ExternalSource {
            name: self.config.name.clone(),
            path: path.to_path_buf(),
            handle: Mutex::new(handle),
            frame_count: 0,
            atom_count: 0,
        };
        let first = source.fetch(0)?;
        source.frame_count = first.0;
        source.atom_count = first.1.atom_count();
        Ok(Box::new(source))
    }
}

struct ExternalSource {
    name: String,
    path: PathBuf,
    handle: Mutex<NodeHandle>,
    frame_count: usize,
    atom_count: usize,
}

impl ExternalSource {
    fn fetch(&self, k: usize) -> Result<(usize, Frame), ImportError> {
        let err = |m: String| ImportError::External(format!("{}: {m}", self.name));
        let mut params = Map::new();
        params.insert("path".into(), Value::String(self.path.display().to_string()));
        let out = self
            .handle
            .lock()
            .unwrap()
            .call(k as u64, &params, &[])
            .map_err(|e| err(e.to_string()))?;
        let count = out[0].as_i64().and_then(|v| v.first().copied()).unwrap_or(0);
        let pos = out[1].as_f64().expect("manifest checked dtype");
        if out[1].shape().get(1).copied().unwrap_or(3) != 3 {
            return Err(err(format!("positions must be N×3, got {:?}", out[1].shape())));
        }
        let positions: Vec<[f64; 3]> = pos.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let lengths = out[2].as_f64().expect("manifest checked dtype");
        if lengths.len() != 3 {
            return Err(err(format!("box must hold 3 lengths, got {}", lengths.len())));
        }
        let sim_box = if lengths.iter().all(|&l| l == 0.0) {
            SimBox::open()
        } else {
            SimBox::orthorhombic([lengths[0], lengths[1], lengths[2]])
        };
        let elements = out[3].as_i64().expect("manifest checked dtype");
        let types = elements.iter().map(|&z| element_symbol(z)).collect();
        let n = positions.len();
        let frame = Frame::new(positions, types, vec![0; n], sim_box, Vec::new(), Default::default())?;
        Ok((usize::try_from(count).map_err(|_| err(format!("negative frame count {count}")))?, frame))
    }
}

impl FrameSource for ExternalSource {
    fn format_name(&self) -> &str {
        &self.name
    }

    fn frame_count(&self) -> usize {
        self.frame_count
    }

    fn atom_count(&self) -> usize {
        self.atom_count
    }

    fn attribute_names(&self) -> Vec<String> {
        Vec::new()
    }

    fn read_frame(&self, index: usize) -> Result<Frame, ImportError> {
        Ok(self.fetch(index)?.1)
    }
}

/// Parses a multi-frame XYZ file into the importer outputs; used by the
/// reference host.
pub fn xyz_frame(text: &str, k: usize) -> Result<Vec<Tensor>, String> {
    let lines: Vec<&str> = text.lines().collect();
    let mut starts = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let n: usize = lines[i].trim().parse().map_err(|_| format!("line {}: expected an atom count", i + 1))?;
        if i + 2 + n > lines.len() {
            break;
        }
        starts.push((i, n));
        i += 2 + n;
    }
    let &(at, n) = starts.get(k).ok_or_else(|| format!("frame {k} out of range ({} frames)", starts.len()))?;
    let mut pos = Vec::with_capacity(3 * n);
    let mut z = Vec::with_capacity(n);
    for (j, line) in lines[at + 2..at + 2 + n].iter().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 4 {
            return Err(format!("line {}: expected `element x y z`", at + 3 + j));
        }
        z.push(SYMBOLS.iter().position(|s| s.eq_ignore_ascii_case(f[0])).unwrap_or(0) as i64);
        for v in &f[1..4] {
            pos.push(v.parse::<f64>().map_err(|e| format!("line {}: {e}", at + 3 + j))?);
        }
    }
    let lengths: Vec<f64> = lines[at + 1]
        .split_whitespace()
        .filter_map(|s| s.strip_prefix("box=").or(Some(s)).and_then(|v| v.parse().ok()))
        .take(3)
        .collect();
    let lengths = if lengths.len() == 3 { lengths } else { vec![0.0; 3] };
    Ok(vec![
        Tensor::scalar_i64(starts.len() as i64),
        Tensor::from_f64(vec![n, 3], pos).map_err(|e| e.to_string())?,
        Tensor::vector_f64(lengths),
        Tensor::vector_i64(z),
    ])
}
