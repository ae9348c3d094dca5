//! Trajectory importers and the SSV writer.

pub mod gro;
pub mod lammps;
pub mod pdb;
mod registry;
pub mod source;
pub mod ssv;

use thiserror::Error;

use crate::model::FrameError;

pub use gro::parse_gro;
pub use lammps::parse_lammps_dump;
pub use pdb::parse_pdb;
pub use registry::{open_trajectory, Importer, ImporterRegistry, TextImporter};
pub use ssv::{parse_ssv, write_ssv, ColumnSpec};

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("failed to read source: {0}")]
    SourceRead(#[from] std::io::Error),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}: expected {expected} columns, found {actual}")]
    RowArity {
        line: usize,
        expected: usize,
        actual: usize,
    },
    #[error("frame {frame} has {actual} atoms, expected {expected}")]
    InconsistentAtomCount {
        frame: usize,
        expected: usize,
        actual: usize,
    },
    #[error("line {line}: {message}")]
    BadRecord { line: usize, message: String },
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    BadItemHeader { line: usize, message: String },
    #[error("frame starting at line {line} is truncated")]
    Truncated { line: usize },
    #[error("no importer recognizes `{0}`")]
    UnknownFormat(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("external importer: {0}")]
    External(String),
}
