//! The JSON graph file shared by the CLI, the service and the editor.
//!
//! ```json
//! {
//!   "nodes": [{"id": 1, "kind": "get_positions", "params": {}}],
//!   "connections": [{"from": "1.positions", "to": "2.positions"}],
//!   "run": {"frames": "0:10", "direction": "forward"}
//! }
//! ```
//!
//! A `ui` block is carried through untouched and never interpreted.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub type NodeId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    #[serde(default)]
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub connections: Vec<ConnectionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ui: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: NodeId,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeKind {
    Builtin(String),
    Script { script: ScriptSpec },
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Builtin(name) => f.write_str(name),
            NodeKind::Script { script } => write!(f, "script:{}", script.path.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptSpec {
    /// `python`, `cpp` or `fortran`; inferred from the extension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    pub path: PathBuf,
    /// Host command; the script path is appended as the last argument.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CommandLine {
    Line(String),
    Argv(Vec<String>),
}

impl CommandLine {
    pub fn argv(&self) -> Vec<String> {
        match self {
            CommandLine::Line(s) => s.split_whitespace().map(str::to_string).collect(),
            CommandLine::Argv(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionDoc {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Forward,
    Backward,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<String>,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub continue_on_error: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("invalid graph JSON: {0}")]
    Json(String),
    #[error("bad port reference `{0}`: expected `node.port`")]
    BadPortRef(String),
    #[error("bad frame range `{0}`: expected `a:b`")]
    BadRange(String),
}

impl GraphDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        serde_json::from_str(text).map_err(|e| DocumentError::Json(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// Makes relative script paths relative to `base` (the graph file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        for node in &mut self.nodes {
            if let NodeKind::Script { script } = &mut node.kind {
                if script.path.is_relative() {
                    script.path = base.join(&script.path);
                }
            }
        }
    }
}

/// A node named either by id or by its `name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeRef {
    Id(NodeId),
    Name(String),
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Id(id) => write!(f, "{id}"),
            NodeRef::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortRef {
    pub node: NodeRef,
    pub port: String,
}

impl FromStr for PortRef {
    type Err = DocumentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DocumentError::BadPortRef(s.to_string());
        let (node, port) = s.rsplit_once('.').ok_or_else(bad)?;
        if node.is_empty() || port.is_empty() {
            return Err(bad());
        }
        let node = match node.parse::<NodeId>() {
            Ok(id) => NodeRef::Id(id),
            Err(_) => NodeRef::Name(node.to_string()),
        };
        Ok(PortRef {
            node,
            port: port.to_string(),
        })
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.node, self.port)
    }
}

/// Half-open frame interval written `a:b`; either bound may be omitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRange {
    pub start: Option<usize>,
    pub end: Option<usize>,
}

impl FrameRange {
    pub const ALL: FrameRange = FrameRange { start: None, end: None };

    pub fn new(start: usize, end: usize) -> Self {
        Self {
            start: Some(start),
            end: Some(end),
        }
    }

    /// Concrete bounds for a trajectory with `count` frames, if in range.
    pub fn resolve(&self, count: usize) -> Option<(usize, usize)> {
        let start = self.start.unwrap_or(0);
        let end = self.end.unwrap_or(count);
        (start <= end && end <= count).then_some((start, end))
    }

    pub fn frames(&self, count: usize, direction: Direction) -> Option<Vec<usize>> {
        let (a, b) = self.resolve(count)?;
        Some(match direction {
            Direction::Forward => (a..b).collect(),
            Direction::Backward => (a..b).rev().collect(),
        })
    }
}

impl FromStr for FrameRange {
    type Err = DocumentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DocumentError::BadRange(s.to_string());
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::ALL);
        }
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let bound = |t: &str| -> Result<Option<usize>, DocumentError> {
            let t = t.trim();
            if t.is_empty() {
                Ok(None)
            } else {
                t.parse().map(Some).map_err(|_| bad())
            }
        };
        let range = FrameRange {
            start: bound(a)?,
            end: bound(b)?,
        };
        if let (Some(a), Some(b)) = (range.start, range.end) {
            if a > b {
                return Err(bad());
            }
        }
        Ok(range)
    }
}

impl fmt::Display for FrameRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |b: Option<usize>| b.map(|v| v.to_string()).unwrap_or_default();
        write!(f, "{}:{}", show(self.start), show(self.end))
    }
}
