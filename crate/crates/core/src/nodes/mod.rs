//! Node implementations and the catalog that instantiates them by kind.
//!
//! A node is an [`Operation`]: a function of its input tensors, parameters
//! and the current frame. Side effects (attribute writes, scene changes,
//! plot points) are not applied directly; they are emitted into the
//! [`NodeContext`] and applied by the engine once the node succeeds.

mod arith;
mod catalog;
mod data;
mod error;
mod params;
mod plot;
mod scene_ops;
pub(crate) mod util;

pub use arith::{compare, CompareOp};
pub use catalog::{Catalog, InstantiateError, KindInfo};
pub use error::NodeError;
pub use params::{ParamError, Params};
pub use plot::PlotMode;

use serde::{Deserialize, Serialize};

use crate::graph::Signature;
use crate::model::Frame;
use crate::scene::{SceneDelta, SceneOp};
use crate::tensor::Tensor;

/// How an attribute read resolves its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadMode {
    /// The value stored for the current frame, or zeros.
    Frame,
    /// The most recent value written during the current run, whatever its
    /// frame. Before the first write it falls back to the imported value
    /// for the current frame, or zeros.
    Carry,
}

impl std::str::FromStr for ReadMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frame" => Ok(ReadMode::Frame),
            "carry" => Ok(ReadMode::Carry),
            other => Err(format!("unknown read mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrRead {
    pub name: String,
    pub mode: ReadMode,
}

/// State a node observes besides its input ports.
///
/// The engine resolves these before execution and folds them into the
/// cache fingerprint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Implicit {
    pub attributes: Vec<AttrRead>,
    /// The node reads the visibility accumulated so far in this frame.
    pub visibility: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotPoint {
    /// One value appended at the current frame index.
    Append(f64),
    /// The whole series replaced by `(index, value)` points.
    Replace(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    WriteAttribute { name: String, values: Vec<f64> },
    Scene(SceneOp),
    Plot(PlotPoint),
}

pub struct NodeContext<'a> {
    pub frame_index: usize,
    /// True while executing the first frame visited by the run.
    pub first_visit: bool,
    pub frame: &'a Frame,
    /// Resolved values of [`Implicit::attributes`], in the same order.
    pub attributes: &'a [Vec<f64>],
    /// Scene changes committed earlier in this frame.
    pub scene: &'a SceneDelta,
    effects: Vec<Effect>,
}

impl<'a> NodeContext<'a> {
    pub fn new(
        frame_index: usize,
        frame: &'a Frame,
        attributes: &'a [Vec<f64>],
        scene: &'a SceneDelta,
    ) -> Self {
        Self {
            frame_index,
            first_visit: false,
            frame,
            attributes,
            scene,
            effects: Vec::new(),
        }
    }

    pub fn atom_count(&self) -> usize {
        self.frame.atom_count()
    }

    pub fn emit(&mut self, effect: Effect) {
        self.effects.push(effect);
    }

    pub fn write_attribute(&mut self, name: &str, values: Vec<f64>) {
        self.emit(Effect::WriteAttribute {
            name: name.to_string(),
            values,
        });
    }

    pub fn scene(&mut self, op: SceneOp) {
        self.emit(Effect::Scene(op));
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn take_effects(&mut self) -> Vec<Effect> {
        std::mem::take(&mut self.effects)
    }
}

/// A node instance ready to execute.
pub trait Operation: Send {
    fn signature(&self) -> &Signature;

    fn implicit(&self) -> Implicit {
        Implicit::default()
    }

    /// Whether results may be served from the run cache.
    fn cacheable(&self) -> bool {
        true
    }

    /// Extra identity folded into the fingerprint, such as a script digest.
    fn identity(&self) -> String {
        String::new()
    }

    fn execute(&mut self, ctx: &mut NodeContext<'_>, inputs: &[Tensor]) -> Result<Vec<Tensor>, NodeError>;
}

type ExecFn = dyn FnMut(&mut NodeContext<'_>, &[Tensor]) -> Result<Vec<Tensor>, NodeError> + Send;

/// Operation backed by a closure; used by most builtin nodes.
pub struct FnOp {
    signature: Signature,
    implicit: Implicit,
    f: Box<ExecFn>,
}

impl FnOp {
    pub fn new<F>(signature: Signature, f: F) -> Self
    where
        F: FnMut(&mut NodeContext<'_>, &[Tensor]) -> Result<Vec<Tensor>, NodeError> + Send + 'static,
    {
        Self {
            signature,
            implicit: Implicit::default(),
            f: Box::new(f),
        }
    }

    pub fn with_implicit(mut self, implicit: Implicit) -> Self {
        self.implicit = implicit;
        self
    }

    pub fn boxed(self) -> Box<dyn Operation> {
        Box::new(self)
    }
}

impl Operation for FnOp {
    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn implicit(&self) -> Implicit {
        self.implicit.clone()
    }

    fn execute(&mut self, ctx: &mut NodeContext<'_>, inputs: &[Tensor]) -> Result<Vec<Tensor>, NodeError> {
        (self.f)(ctx, inputs)
    }
}
