//! Dataflow execution engine for molecular-dynamics trajectory analysis.
//!
//! Analyses are graphs of typed nodes exchanging [`Tensor`] values. Graphs
//! run frame by frame over a lazily loaded [`Trajectory`]; per-atom
//! attributes carry state between frames and nodes, and scene operations
//! build a per-frame visualization state that is cached for scrubbing.

pub mod cluster;
pub mod config;
pub mod fixtures;
pub mod graph;
pub mod hydrate;
pub mod io;
pub mod model;
pub mod nodes;
pub mod output;
pub mod scene;
pub mod script;
pub mod tensor;

pub use model::{AttributeStore, Frame, SimBox, Trajectory};
pub use tensor::{DType, Tensor, TensorData, TensorError};
