use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use super::source::{FileSource, FormatIndex, IndexedSource};
use super::{gro, lammps, pdb, ssv, ImportError};
use crate::model::{FrameSource, Trajectory, DEFAULT_CACHE_BUDGET};

const PROBE_BYTES: usize = 4096;

/// A trajectory importer: cheap content probe plus an opener.
pub trait Importer: Send + Sync {
    fn name(&self) -> &str;
    /// Lower-case file extensions claimed without probing.
    fn extensions(&self) -> Vec<String>;
    /// Inspects the first bytes of a file. Must not assume the whole file.
    fn probe(&self, head: &[u8]) -> bool;
    fn open(&self, path: &Path) -> Result<Box<dyn FrameSource>, ImportError>;
}

/// Built-in text importers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextImporter {
    Ssv,
    Gro,
    Pdb,
    Lammps,
}

fn first_lines(head: &[u8], n: usize) -> Vec<&str> {
    let text = match std::str::from_utf8(head) {
        Ok(t) => t,
        // probe windows may cut a multi-byte character
        Err(e) => std::str::from_utf8(&head[..e.valid_up_to()]).unwrap_or(""),
    };
    text.lines().take(n).collect()
}

impl Importer for TextImporter {
    fn name(&self) -> &str {
        match self {
            TextImporter::Ssv => "ssv",
            TextImporter::Gro => "gro",
            TextImporter::Pdb => "pdb",
            TextImporter::Lammps => "lammps",
        }
    }

    fn extensions(&self) -> Vec<String> {
        let exts: &[&str] = match self {
            TextImporter::Ssv => &["ssv"],
            TextImporter::Gro => &["gro"],
            TextImporter::Pdb => &["pdb", "ent"],
            TextImporter::Lammps => &["lammpstrj", "dump"],
        };
        exts.iter().map(|s| s.to_string()).collect()
    }

    fn probe(&self, head: &[u8]) -> bool {
        let lines = first_lines(head, 64);
        match self {
            TextImporter::Ssv => {
                lines.len() >= 2
                    && ssv::ColumnSpec::parse(lines[0]).is_ok()
                    && lines[1].split_whitespace().next() == Some("frame")
            }
            TextImporter::Gro => {
                lines.len() >= 3
                    && lines[1].trim().parse::<usize>().is_ok()
                    && lines[2].len() >= 44
                    && lines[2].get(20..28).map_or(false, |c| c.trim().parse::<f64>().is_ok())
            }
            TextImporter::Pdb => lines.iter().any(|l| {
                ["ATOM  ", "HETATM", "CRYST1", "MODEL "].iter().any(|r| l.starts_with(r))
            }),
            TextImporter::Lammps => lines.first().map_or(false, |l| l.starts_with("ITEM: TIMESTEP")),
        }
    }

    fn open(&self, path: &Path) -> Result<Box<dyn FrameSource>, ImportError> {
        let reader = BufReader::new(File::open(path)?);
        let index: FormatIndex = match self {
            TextImporter::Ssv => ssv::index(reader)?,
            TextImporter::Gro => gro::index(reader)?,
            TextImporter::Pdb => pdb::index(reader)?,
            TextImporter::Lammps => lammps::index(reader)?,
        };
        Ok(Box::new(IndexedSource::new(Box::new(FileSource::open(path)?), index)))
    }
}

/// Ordered set of importers. Extension matches win; otherwise the first
/// importer whose probe accepts the file is used.
pub struct ImporterRegistry {
    importers: Vec<Box<dyn Importer>>,
    cache_budget: usize,
}

impl Default for ImporterRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl ImporterRegistry {
    pub fn empty() -> Self {
        Self {
            importers: Vec::new(),
            cache_budget: DEFAULT_CACHE_BUDGET,
        }
    }

    pub fn with_builtin() -> Self {
        let mut r = Self::empty();
        for imp in [TextImporter::Ssv, TextImporter::Gro, TextImporter::Pdb, TextImporter::Lammps] {
            r.register(Box::new(imp));
        }
        r
    }

    pub fn register(&mut self, importer: Box<dyn Importer>) {
        self.importers.push(importer);
    }

    pub fn set_cache_budget(&mut self, bytes: usize) {
        self.cache_budget = bytes;
    }

    pub fn names(&self) -> Vec<&str> {
        self.importers.iter().map(|i| i.name()).collect()
    }

    /// Chooses an importer for `path`.
    pub fn select(&self, path: &Path) -> Result<&dyn Importer, ImportError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if let Some(ext) = ext {
            if let Some(imp) = self.importers.iter().find(|i| i.extensions().contains(&ext)) {
                return Ok(imp.as_ref());
            }
        }
        let mut head = Vec::with_capacity(PROBE_BYTES);
        File::open(path)?
            .take(PROBE_BYTES as u64)
            .read_to_end(&mut head)?;
        self.importers
            .iter()
            .find(|i| i.probe(&head))
            .map(|i| i.as_ref())
            .ok_or_else(|| ImportError::UnknownFormat(path.display().to_string()))
    }

    pub fn open(&self, path: &Path) -> Result<Trajectory, ImportError> {
        let importer = self.select(path)?;
        let source = importer.open(path)?;
        Ok(Trajectory::with_cache_budget(
            source,
            path.display().to_string(),
            self.cache_budget,
        ))
    }
}

/// Opens `path` with the built-in importers.
pub fn open_trajectory(path: &Path) -> Result<Trajectory, ImportError> {
    ImporterRegistry::with_builtin().open(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
        p
    }

    const GRO: &str = "t\n    1\n    1SOL     OW    1   0.100   0.200   0.300\n   1.0 1.0 1.0\n";

    #[test]
    fn dispatches_on_extension() {
        let dir = tempfile::tempdir().unwrap();
        let reg = ImporterRegistry::with_builtin();
        let gro = write(dir.path(), "sys.gro", GRO);
        assert_eq!(reg.select(&gro).unwrap().name(), "gro");
        let ssv = write(dir.path(), "sys.ssv", "x y z\nframe 1 1 1 1\n0 0 0\n");
        assert_eq!(reg.select(&ssv).unwrap().name(), "ssv");
    }

    #[test]
    fn unknown_extension_unrecognized_content() {
        let dir = tempfile::tempdir().unwrap();
        let xyz = write(dir.path(), "sys.xyz", "1\ncomment\nO 0 0 0\n");
        assert!(matches!(
            ImporterRegistry::with_builtin().open(&xyz),
            Err(ImportError::UnknownFormat(_))
        ));
    }

    #[test]
    fn falls_back_to_probe() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "conf.txt", GRO);
        let t = ImporterRegistry::with_builtin().open(&p).unwrap();
        assert_eq!(t.format_name(), "gro");
        assert_eq!(t.load_frame(0).unwrap().positions[0], [1.0, 2.0, 3.0]);
    }
}
