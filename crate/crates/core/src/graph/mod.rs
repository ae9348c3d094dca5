//! Analysis graphs: typed ports, validation, scheduling and execution.
//!
//! A [`Graph`] is built from a [`GraphDocument`] through the node
//! [`Catalog`](crate::nodes::Catalog). Port edges must be acyclic; attribute
//! reads and writes are not edges, which is what lets a graph read an
//! attribute early in a frame and write it back later (recurrence).

mod cache;
mod dag;
mod document;
mod exec;
mod fingerprint;
mod port;
mod report;

pub use cache::{CachedResult, RunCache};
pub use dag::{Connection, Diagnostic, Graph, GraphError, GraphNode, Severity};
pub use document::{
    CommandLine, ConnectionDoc, Direction, DocumentError, FrameRange, GraphDocument, NodeDoc, NodeId, NodeKind,
    NodeRef, PortRef, RunSpec, ScriptSpec,
};
pub use exec::{execute_trajectory, Executor, FrameOutcome, RunError, RunOptions, RunOutput};
pub use fingerprint::{fingerprint_inputs, Fingerprint, FingerprintBuilder, ENGINE_VERSION};
pub use port::{PortSpec, PortType, Signature};
pub use report::{
    FrameReport, NodeFailure, NoopObserver, PlotSeries, RunEvent, RunObserver, RunReport, RunStatus, RunSummary,
    RunTimings,
};
