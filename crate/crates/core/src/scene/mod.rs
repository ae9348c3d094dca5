//! Per-frame visualization state built from scene operation nodes.
//!
//! Nodes emit [`SceneOp`]s that accumulate into a frame's [`SceneDelta`].
//! A delta is resolved against element defaults into a [`SceneSnapshot`],
//! the JSON document consumed by viewers.

mod delta;
mod snapshot;

pub use delta::{SceneDelta, SceneOp};
pub use snapshot::{export_snapshot, resolve_scene, AtomView, SceneDefaults, SceneSnapshot, SNAPSHOT_SCHEMA_VERSION};
