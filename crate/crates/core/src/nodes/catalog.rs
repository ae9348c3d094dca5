use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::{arith, data, plot, scene_ops, Operation, ParamError, Params};
use crate::graph::NodeKind;
use crate::script::{HostOptions, ScriptError, ScriptNode};

pub type Builder = fn(&Params) -> Result<Box<dyn Operation>, ParamError>;

#[derive(Debug, Error)]
pub enum InstantiateError {
    #[error("unknown node kind `{0}`")]
    UnknownKind(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Script(#[from] ScriptError),
}

#[derive(Debug, Clone, Serialize)]
pub struct KindInfo {
    pub kind: &'static str,
    pub category: &'static str,
    pub summary: &'static str,
}

struct Entry {
    info: KindInfo,
    build: Builder,
}

/// Maps node kind names to constructors.
pub struct Catalog {
    entries: BTreeMap<&'static str, Entry>,
    pub host_options: HostOptions,
}

impl Default for Catalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Catalog {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
            host_options: HostOptions::default(),
        }
    }

    pub fn builtin() -> Self {
        let mut c = Self::empty();
        c.register("get_positions", "data", "positions and indices of atoms passing a filter", data::get_positions);
        c.register("get_attribute", "data", "read a per-atom attribute", data::get_attribute);
        c.register("set_attribute", "data", "write a per-atom attribute", data::set_attribute);
        c.register("set_colors", "scene", "override atom colors", scene_ops::set_colors);
        c.register("show_range", "scene", "hide atoms whose attribute is outside [lo, hi]", scene_ops::show_range);
        c.register("set_radius_scale", "scene", "scale atom radii", scene_ops::set_radius_scale);
        c.register("extra_bonds", "scene", "draw additional bonds", scene_ops::extra_bonds);
        c.register("set_camera_center", "scene", "point the camera at a position", scene_ops::set_camera_center);
        c.register("plot_data", "scene", "record values into a plot series", plot::plot_data);
        c.register("const", "arith", "constant tensor", arith::constant);
        c.register("add", "arith", "elementwise sum", arith::add);
        c.register("mul", "arith", "elementwise product", arith::mul);
        c.register("compare_mask", "arith", "0/1 mask from a threshold comparison", arith::compare_mask);
        c.register("count_nonzero", "arith", "number of nonzero elements", arith::count_nonzero);
        c.register("cast", "arith", "convert between i64 and f64", arith::cast);
        c.register("masked_centroid", "arith", "mean position of masked atoms", arith::masked_centroid);
        crate::cluster::register(&mut c);
        crate::hydrate::register(&mut c);
        c
    }

    pub fn register(&mut self, kind: &'static str, category: &'static str, summary: &'static str, build: Builder) {
        self.entries.insert(
            kind,
            Entry {
                info: KindInfo { kind, category, summary },
                build,
            },
        );
    }

    pub fn kinds(&self) -> Vec<KindInfo> {
        self.entries.values().map(|e| e.info.clone()).collect()
    }

    pub fn contains(&self, kind: &str) -> bool {
        self.entries.contains_key(kind)
    }

    pub fn instantiate(&self, kind: &NodeKind, params: &Params) -> Result<Box<dyn Operation>, InstantiateError> {
        match kind {
            NodeKind::Builtin(name) => {
                let entry = self
                    .entries
                    .get(name.as_str())
                    .ok_or_else(|| InstantiateError::UnknownKind(name.clone()))?;
                Ok((entry.build)(params)?)
            }
            NodeKind::Script { script } => Ok(Box::new(ScriptNode::open(script, params, &self.host_options)?)),
        }
    }
}
