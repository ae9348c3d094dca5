use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use super::document::{ConnectionDoc, DocumentError, GraphDocument, NodeDoc, NodeId, NodeKind, NodeRef, PortRef, RunSpec};
use super::port::{PortType, Signature};
use crate::nodes::{Catalog, InstantiateError, Operation, Params};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate node name `{0}`")]
    DuplicateName(String),
    #[error("node name `{0}` must not be a number")]
    NumericName(String),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeRef),
    #[error("node {node} has no {direction} port `{port}`")]
    UnknownPort {
        node: NodeId,
        port: String,
        direction: &'static str,
    },
    #[error("type mismatch: {from} ({from_type}) cannot feed {to} ({to_type})")]
    TypeMismatch {
        from: String,
        to: String,
        from_type: PortType,
        to_type: PortType,
    },
    #[error("input {0} is already connected")]
    PortOccupied(String),
    #[error("connection closes a cycle: {}", format_cycle(.cycle))]
    CycleDetected { cycle: Vec<NodeId> },
    #[error("node {node}: {source}")]
    Instantiate {
        node: NodeId,
        #[source]
        source: InstantiateError,
    },
    #[error(transparent)]
    Document(#[from] DocumentError),
}

fn format_cycle(cycle: &[NodeId]) -> String {
    cycle.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(" -> ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// One validation finding, addressed to a node or connection when possible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    /// Index into the document's `connections` list.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub connection: Option<usize>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}]", self.code)?;
        if let Some(n) = self.node {
            write!(f, " node {n}")?;
        }
        if let Some(c) = self.connection {
            write!(f, " connection #{c}")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl GraphError {
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::DuplicateNode(_) => "DuplicateNode",
            GraphError::DuplicateName(_) => "DuplicateName",
            GraphError::NumericName(_) => "NumericName",
            GraphError::UnknownNode(_) => "UnknownNode",
            GraphError::UnknownPort { .. } => "UnknownPort",
            GraphError::TypeMismatch { .. } => "TypeMismatch",
            GraphError::PortOccupied(_) => "PortOccupied",
            GraphError::CycleDetected { .. } => "CycleDetected",
            GraphError::Instantiate { source, .. } => match source {
                InstantiateError::UnknownKind(_) => "UnknownKind",
                InstantiateError::Param(_) => "BadParam",
                InstantiateError::Script(_) => "ScriptError",
            },
            GraphError::Document(_) => "BadDocument",
        }
    }

    pub fn diagnostic(&self, node: Option<NodeId>, connection: Option<usize>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            code: self.code().to_string(),
            message: self.to_string(),
            node,
            connection,
        }
    }
}

pub struct GraphNode {
    pub id: NodeId,
    pub name: Option<String>,
    pub kind: NodeKind,
    pub params: Params,
    pub(crate) op: Box<dyn Operation>,
}

impl GraphNode {
    pub fn signature(&self) -> &Signature {
        self.op.signature()
    }

    /// The name if set, otherwise the id.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.id.to_string())
    }
}

impl fmt::Debug for GraphNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphNode")
            .field("id", &self.id)
            .field("name", &self.name)
            .field("kind", &self.kind)
            .finish()
    }
}

/// A port edge between an output and an input, by port index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Connection {
    pub from: (NodeId, usize),
    pub to: (NodeId, usize),
}

/// Validated analysis graph with instantiated nodes.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: BTreeMap<NodeId, GraphNode>,
    connections: Vec<Connection>,
    pub run: Option<RunSpec>,
    pub ui: Option<Value>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph, collecting every problem instead of stopping at the first.
    pub fn from_document(doc: &GraphDocument, catalog: &Catalog) -> Result<Graph, Vec<Diagnostic>> {
        let mut g = Graph {
            run: doc.run.clone(),
            ui: doc.ui.clone(),
            ..Graph::default()
        };
        let mut diags = Vec::new();
        for node in &doc.nodes {
            let params = match Params::from_value(node.params.clone()) {
                Ok(p) => p,
                Err(e) => {
                    let err = GraphError::Instantiate {
                        node: node.id,
                        source: InstantiateError::Param(e),
                    };
                    diags.push(err.diagnostic(Some(node.id), None));
                    continue;
                }
            };
            if let Err(e) = g.add_node(node.id, node.kind.clone(), params, node.name.clone(), catalog) {
                diags.push(e.diagnostic(Some(node.id), None));
            }
        }
        for (i, c) in doc.connections.iter().enumerate() {
            let result = c
                .from
                .parse::<PortRef>()
                .and_then(|from| Ok((from, c.to.parse::<PortRef>()?)))
                .map_err(GraphError::from)
                .and_then(|(from, to)| g.connect(&from, &to));
            if let Err(e) = result {
                diags.push(e.diagnostic(None, Some(i)));
            }
        }
        if let Some(frames) = doc.run.as_ref().and_then(|r| r.frames.as_deref()) {
            if let Err(e) = frames.parse::<super::FrameRange>() {
                diags.push(GraphError::from(e).diagnostic(None, None));
            }
        }
        if diags.is_empty() {
            Ok(g)
        } else {
            Err(diags)
        }
    }

    pub fn from_json(text: &str, catalog: &Catalog) -> Result<Graph, Vec<Diagnostic>> {
        let doc = GraphDocument::from_json(text).map_err(|e| vec![GraphError::from(e).diagnostic(None, None)])?;
        Self::from_document(&doc, catalog)
    }

    pub fn to_document(&self) -> GraphDocument {
        let nodes = self
            .nodes
            .values()
            .map(|n| NodeDoc {
                id: n.id,
                kind: n.kind.clone(),
                name: n.name.clone(),
                params: n.params.to_value(),
            })
            .collect();
        let connections = self
            .connections
            .iter()
            .map(|c| ConnectionDoc {
                from: format!("{}.{}", c.from.0, self.nodes[&c.from.0].signature().outputs[c.from.1].name),
                to: format!("{}.{}", c.to.0, self.nodes[&c.to.0].signature().inputs[c.to.1].name),
            })
            .collect();
        GraphDocument {
            nodes,
            connections,
            run: self.run.clone(),
            ui: self.ui.clone(),
        }
    }

    pub fn next_id(&self) -> NodeId {
        self.nodes.keys().next_back().map_or(1, |id| id + 1)
    }

    pub fn add_node(
        &mut self,
        id: NodeId,
        kind: NodeKind,
        params: Params,
        name: Option<String>,
        catalog: &Catalog,
    ) -> Result<NodeId, GraphError> {
        if self.nodes.contains_key(&id) {
            return Err(GraphError::DuplicateNode(id));
        }
        if let Some(n) = &name {
            if n.parse::<NodeId>().is_ok() {
                return Err(GraphError::NumericName(n.clone()));
            }
            if self.nodes.values().any(|other| other.name.as_ref() == Some(n)) {
                return Err(GraphError::DuplicateName(n.clone()));
            }
        }
        let op = catalog
            .instantiate(&kind, &params)
            .map_err(|source| GraphError::Instantiate { node: id, source })?;
        self.nodes.insert(
            id,
            GraphNode {
                id,
                name,
                kind,
                params,
                op,
            },
        );
        Ok(id)
    }

    /// Insert a node built outside the catalog.
    pub fn insert_operation(&mut self, id: NodeId, kind: NodeKind, op: Box<dyn Operation>) -> Result<(), GraphError> {
        if self.nodes.contains_key(&id) {
            return Err(GraphError::DuplicateNode(id));
        }
        self.nodes.insert(
            id,
            GraphNode {
                id,
                name: None,
                kind,
                params: Params::new(),
                op,
            },
        );
        Ok(())
    }

    pub fn remove_node(&mut self, id: NodeId) -> Option<GraphNode> {
        let node = self.nodes.remove(&id)?;
        self.connections.retain(|c| c.from.0 != id && c.to.0 != id);
        Some(node)
    }

    pub fn resolve(&self, r: &NodeRef) -> Result<NodeId, GraphError> {
        match r {
            NodeRef::Id(id) if self.nodes.contains_key(id) => Ok(*id),
            NodeRef::Name(n) => self
                .nodes
                .values()
                .find(|node| node.name.as_deref() == Some(n))
                .map(|node| node.id)
                .ok_or_else(|| GraphError::UnknownNode(r.clone())),
            _ => Err(GraphError::UnknownNode(r.clone())),
        }
    }

    /// Adds a port edge after checking types, occupancy and acyclicity.
    pub fn connect(&mut self, from: &PortRef, to: &PortRef) -> Result<(), GraphError> {
        let src = self.resolve(&from.node)?;
        let dst = self.resolve(&to.node)?;
        let (out_idx, out) = self.nodes[&src].signature().output(&from.port).ok_or_else(|| GraphError::UnknownPort {
            node: src,
            port: from.port.clone(),
            direction: "output",
        })?;
        let (in_idx, input) = self.nodes[&dst].signature().input(&to.port).ok_or_else(|| GraphError::UnknownPort {
            node: dst,
            port: to.port.clone(),
            direction: "input",
        })?;
        if !out.ty.compatible_with(&input.ty) {
            return Err(GraphError::TypeMismatch {
                from: from.to_string(),
                to: to.to_string(),
                from_type: out.ty.clone(),
                to_type: input.ty.clone(),
            });
        }
        if self.input_source(dst, in_idx).is_some() {
            return Err(GraphError::PortOccupied(to.to_string()));
        }
        if let Some(mut path) = self.path(dst, src) {
            path.insert(0, src);
            return Err(GraphError::CycleDetected { cycle: path });
        }
        self.connections.push(Connection {
            from: (src, out_idx),
            to: (dst, in_idx),
        });
        Ok(())
    }

    /// Removes the edge feeding `to`, returning whether one existed.
    pub fn disconnect(&mut self, to: &PortRef) -> Result<bool, GraphError> {
        let dst = self.resolve(&to.node)?;
        let (in_idx, _) = self.nodes[&dst].signature().input(&to.port).ok_or_else(|| GraphError::UnknownPort {
            node: dst,
            port: to.port.clone(),
            direction: "input",
        })?;
        let before = self.connections.len();
        self.connections.retain(|c| c.to != (dst, in_idx));
        Ok(self.connections.len() != before)
    }

    /// Port-edge path from `a` to `b`, inclusive, if one exists.
    fn path(&self, a: NodeId, b: NodeId) -> Option<Vec<NodeId>> {
        let mut prev: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut stack = vec![a];
        let mut seen = std::collections::BTreeSet::from([a]);
        while let Some(n) = stack.pop() {
            if n == b {
                let mut path = vec![b];
                let mut cur = b;
                while cur != a {
                    cur = prev[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for c in self.connections.iter().filter(|c| c.from.0 == n) {
                if seen.insert(c.to.0) {
                    prev.insert(c.to.0, n);
                    stack.push(c.to.0);
                }
            }
        }
        None
    }

    pub fn input_source(&self, node: NodeId, port: usize) -> Option<(NodeId, usize)> {
        self.connections.iter().find(|c| c.to == (node, port)).map(|c| c.from)
    }

    /// Kahn's algorithm; ready nodes leave in ascending id order.
    pub fn topo_order(&self) -> Result<Vec<NodeId>, GraphError> {
        let mut indegree: BTreeMap<NodeId, usize> = self.nodes.keys().map(|&id| (id, 0)).collect();
        for c in &self.connections {
            *indegree.get_mut(&c.to.0).expect("edge endpoints exist") += 1;
        }
        let mut ready: BinaryHeap<Reverse<NodeId>> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&id, _)| Reverse(id))
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(Reverse(id)) = ready.pop() {
            order.push(id);
            for c in self.connections.iter().filter(|c| c.from.0 == id) {
                let d = indegree.get_mut(&c.to.0).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(Reverse(c.to.0));
                }
            }
        }
        if order.len() != self.nodes.len() {
            let stuck: Vec<NodeId> = indegree.into_iter().filter(|(_, d)| *d > 0).map(|(id, _)| id).collect();
            return Err(GraphError::CycleDetected { cycle: stuck });
        }
        Ok(order)
    }

    /// Inputs left unconnected; a graph with any cannot run.
    pub fn unconnected_inputs(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for node in self.nodes.values() {
            for (i, port) in node.signature().inputs.iter().enumerate() {
                if self.input_source(node.id, i).is_none() {
                    out.push(Diagnostic {
                        severity: Severity::Warning,
                        code: "UnconnectedInput".into(),
                        message: format!("input `{}.{}` is not connected", node.id, port.name),
                        node: Some(node.id),
                        connection: None,
                    });
                }
            }
        }
        out
    }

    pub fn node(&self, id: NodeId) -> Option<&GraphNode> {
        self.nodes.get(&id)
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> Option<&mut GraphNode> {
        self.nodes.get_mut(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &GraphNode> {
        self.nodes.values()
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
