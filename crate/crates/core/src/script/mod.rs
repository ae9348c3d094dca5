//! External script nodes.
//!
//! A script exposes ports through comment annotations and runs in a host
//! process that speaks a line-oriented JSON control protocol with binary
//! tensor payloads. Hosts live as long as their node and are reused across
//! frames.

mod annotations;
mod host;
mod importer;
mod node;
pub mod serve;
pub mod wire;

use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

pub use annotations::{parse_annotations, Language, Manifest, PortDecl, PortDirection};
pub use host::{HostOptions, NodeHandle, ShutdownOutcome};
pub use importer::{element_symbol, importer_manifest, xyz_frame, ExternalImporter, ExternalImporterConfig};
pub use node::{default_command, manifest_of, ScriptNode, LOOPBACK_PREFIX};
pub use serve::{serve, Behavior, ServeQuirks};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("cannot read script {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown script language `{0}`")]
    UnknownLanguage(String),
    #[error("bad annotation at line {line}: {text}")]
    BadAnnotation { line: usize, text: String },
    #[error("duplicate port `{name}` at line {line}")]
    DuplicatePort { name: String, line: usize },
    #[error("script declares no outputs")]
    NoOutputs,
    #[error("param `{name}`: {message}")]
    BadParam { name: String, message: String },
    #[error("no host command configured for {0} scripts")]
    NoCommand(Language),
    #[error("failed to start host: {0}")]
    SpawnFailed(String),
    #[error("host did not complete the handshake within {0:?}")]
    HandshakeTimeout(Duration),
    #[error("host manifest {actual} does not match the script {expected}")]
    ManifestMismatch { expected: String, actual: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("host error: {0}")]
    Remote(String),
    #[error("call did not complete within {0:?}")]
    CallTimeout(Duration),
    #[error("{0}")]
    HostExited(String),
    #[error("host handle is closed")]
    Closed,
}

impl ScriptError {
    pub fn code(&self) -> &'static str {
        match self {
            ScriptError::Io { .. } => "ScriptUnreadable",
            ScriptError::UnknownLanguage(_) => "UnknownLanguage",
            ScriptError::BadAnnotation { .. } => "BadAnnotation",
            ScriptError::DuplicatePort { .. } => "DuplicatePort",
            ScriptError::NoOutputs => "NoOutputs",
            ScriptError::BadParam { .. } => "BadParam",
            ScriptError::NoCommand(_) => "NoCommand",
            ScriptError::SpawnFailed(_) => "SpawnFailed",
            ScriptError::HandshakeTimeout(_) => "HandshakeTimeout",
            ScriptError::ManifestMismatch { .. } => "ManifestMismatch",
            ScriptError::Protocol(_) => "ProtocolViolation",
            ScriptError::Remote(_) => "NodeError",
            ScriptError::CallTimeout(_) => "CallTimeout",
            ScriptError::HostExited(_) => "HostExited",
            ScriptError::Closed => "HostClosed",
        }
    }
}
