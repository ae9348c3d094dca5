//! Clathrate hydrate detection.
//!
//! Guest pairs within a cutoff select the waters inside a double cone
//! around their axis. Hydrogen bonds among those waters are rebonded
//! oxygen to oxygen, five-membered rings are perceived, and guests whose
//! pair waters contain a ring are grouped and labeled.

mod geometry;
mod hbonds;
mod register;
mod rings;

pub use geometry::{angle, cross, dot, filter_guests, filter_waters, sub, Cone, DEFAULT_CONE_ANGLE, DEFAULT_GUEST_CUTOFF};
pub use hbonds::{
    covalent_map, hbonds_filtered, is_hbond, reconnect_water, CovalentMap, DEFAULT_COVALENT_CUTOFF, DEFAULT_R_MAX,
    DEFAULT_THETA_MIN,
};
pub use register::{mcg_order_parameter, register_hydrate, witnessing_rings, HydrateLabels};
pub use rings::{find_links, DEFAULT_RING_SIZE};

use crate::graph::{PortSpec, PortType, Signature};
use crate::model::Frame;
use crate::nodes::util::{cell, csr_rows, csr_tensors, expect_rank, f64s, i64s, index, index_tensor, indices, pair_tensor, pairs, rows3};
use crate::nodes::{Catalog, FnOp, NodeError, Operation, ParamError, Params};
use crate::tensor::{DType, Tensor};

pub const DEFAULT_OXYGENS: &[&str] = &["O", "OW"];
pub const DEFAULT_HYDROGENS: &[&str] = &["H", "HW", "HW1", "HW2"];

fn vec_i64(name: &str) -> PortSpec {
    PortSpec::new(name, PortType::vector(DType::I64))
}

fn pair_port(name: &str) -> PortSpec {
    PortSpec::new(name, PortType::rows_of(DType::I64, 2))
}

fn positive(p: &Params, key: &str, default: f64) -> Result<f64, ParamError> {
    let v = p.f64_or(key, default)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(ParamError::new(key, format!("must be positive, got {v}")));
    }
    Ok(v)
}

/// Species lists and cutoff shared by the nodes that need covalent O-H bonds.
#[derive(Debug, Clone)]
struct Species {
    oxygens: Vec<String>,
    hydrogens: Vec<String>,
    covalent_cutoff: f64,
}

impl Species {
    const KEYS: [&'static str; 3] = ["oxygens", "hydrogens", "covalent_cutoff"];

    fn from_params(p: &Params) -> Result<Self, ParamError> {
        Ok(Self {
            oxygens: p.strings_or("oxygens", DEFAULT_OXYGENS)?,
            hydrogens: p.strings_or("hydrogens", DEFAULT_HYDROGENS)?,
            covalent_cutoff: positive(p, "covalent_cutoff", DEFAULT_COVALENT_CUTOFF)?,
        })
    }

    fn map(&self, frame: &Frame) -> Result<CovalentMap, NodeError> {
        let o = frame.select_types(&self.oxygens);
        let h = frame.select_types(&self.hydrogens);
        covalent_map(frame, &cell(frame)?, &o, &h, self.covalent_cutoff)
    }
}

fn filter_guests_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["cutoff"])?;
    let cutoff = positive(p, "cutoff", DEFAULT_GUEST_CUTOFF)?;
    let sig = Signature::new(
        vec![PortSpec::new("positions", PortType::rows_of(DType::F64, 3)), vec_i64("indices")],
        vec![pair_port("pairs")],
    );
    Ok(FnOp::new(sig, move |ctx, inputs| {
        let pos = rows3(&inputs[0], "positions")?;
        let atoms = indices(&inputs[1], "indices", ctx.atom_count())?;
        if atoms.len() != pos.len() {
            return Err(NodeError::ShapeMismatch {
                expected: vec![pos.len()],
                actual: vec![atoms.len()],
            });
        }
        Ok(vec![pair_tensor(&filter_guests(&pos, &atoms, &cell(ctx.frame)?, cutoff)?)])
    })
    .boxed())
}

fn filter_waters_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["angle", "max_distance"])?;
    let angle = p.f64_or("angle", DEFAULT_CONE_ANGLE)?;
    if !(angle > 0.0 && angle < 90.0) {
        return Err(ParamError::new("angle", format!("{angle} outside (0, 90)")));
    }
    let max_distance = match p.opt_f64("max_distance")? {
        Some(d) if !(d > 0.0) => return Err(ParamError::new("max_distance", "must be positive")),
        d => d,
    };
    let cone = Cone { angle, max_distance };
    let sig = Signature::new(
        vec![pair_port("pairs"), vec_i64("waters")],
        vec![vec_i64("offsets"), vec_i64("waters"), vec_i64("selected")],
    );
    Ok(FnOp::new(sig, move |ctx, inputs| {
        let n = ctx.atom_count();
        let pairs = pairs(&inputs[0], "pairs", n)?;
        let waters = indices(&inputs[1], "waters", n)?;
        let per_pair = filter_waters(&pairs, &ctx.frame.positions, &waters, &cell(ctx.frame)?, &cone);
        let mut selected: Vec<usize> = per_pair.iter().flatten().copied().collect();
        selected.sort_unstable();
        selected.dedup();
        let (o, w) = csr_tensors(&per_pair);
        Ok(vec![o, w, index_tensor(&selected)])
    })
    .boxed())
}

fn hbonds_filtered_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    let mut keys = vec!["r_max", "theta_min"];
    keys.extend(Species::KEYS);
    p.only(&keys)?;
    let species = Species::from_params(p)?;
    let r_max = positive(p, "r_max", DEFAULT_R_MAX)?;
    let theta_min = p.f64_or("theta_min", DEFAULT_THETA_MIN)?;
    if !(0.0..=180.0).contains(&theta_min) {
        return Err(ParamError::new("theta_min", format!("{theta_min} outside [0, 180]")));
    }
    let sig = Signature::new(vec![vec_i64("selected")], vec![pair_port("edges")]);
    Ok(FnOp::new(sig, move |ctx, inputs| {
        let selected = indices(&inputs[0], "selected", ctx.atom_count())?;
        let map = species.map(ctx.frame)?;
        let edges = hbonds_filtered(&selected, &ctx.frame.positions, &map, &cell(ctx.frame)?, r_max, theta_min)?;
        Ok(vec![pair_tensor(&edges)])
    })
    .boxed())
}

fn reconnect_water_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&Species::KEYS)?;
    let species = Species::from_params(p)?;
    let sig = Signature::new(vec![pair_port("edges")], vec![pair_port("bonds")]);
    Ok(FnOp::new(sig, move |ctx, inputs| {
        let edges = pairs(&inputs[0], "edges", ctx.atom_count())?;
        if edges.is_empty() {
            return Ok(vec![pair_tensor(&[])]);
        }
        let map = species.map(ctx.frame)?;
        Ok(vec![pair_tensor(&reconnect_water(&edges, &map)?)])
    })
    .boxed())
}

fn find_links_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["n"])?;
    let n = p.usize_or("n", DEFAULT_RING_SIZE)?;
    if n < 3 {
        return Err(ParamError::new("n", "ring size must be at least 3"));
    }
    let sig = Signature::new(vec![pair_port("bonds")], vec![PortSpec::new("rings", PortType::rows_of(DType::I64, n))]);
    Ok(FnOp::new(sig, move |ctx, inputs| {
        let bonds = pairs(&inputs[0], "bonds", ctx.atom_count())?;
        let rings = find_links(&bonds, n);
        let flat = rings.iter().flatten().map(|&v| v as i64).collect();
        Ok(vec![Tensor::from_i64(vec![rings.len(), n], flat)?])
    })
    .boxed())
}

fn ring_rows(t: &Tensor, len: usize) -> Result<Vec<Vec<usize>>, NodeError> {
    expect_rank(t, 2)?;
    let cols = t.shape()[1];
    if cols == 0 {
        return Ok(Vec::new());
    }
    i64s(t, "rings")?
        .chunks_exact(cols)
        .map(|row| row.iter().map(|&v| index(v, len)).collect())
        .collect()
}

fn register_hydrate_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["min_rings"])?;
    let min_rings = p.usize_or("min_rings", 1)?;
    if min_rings == 0 {
        return Err(ParamError::new("min_rings", "must be at least 1"));
    }
    let sig = Signature::new(
        vec![
            pair_port("pairs"),
            vec_i64("offsets"),
            vec_i64("waters"),
            PortSpec::new("rings", PortType::new(DType::I64, 2)),
        ],
        vec![
            PortSpec::new("labels", PortType::vector(DType::F64)),
            PortSpec::new("count", PortType::scalar(DType::I64)),
        ],
    );
    Ok(FnOp::new(sig, move |ctx, inputs| {
        let n = ctx.atom_count();
        let pairs = pairs(&inputs[0], "pairs", n)?;
        let waters = csr_rows(&inputs[1], &inputs[2], n)?;
        let rings = ring_rows(&inputs[3], n)?;
        let out = register_hydrate(n, &pairs, &waters, &rings, min_rings)?;
        Ok(vec![Tensor::vector_f64(out.labels), Tensor::scalar_i64(out.count as i64)])
    })
    .boxed())
}

fn mcg_order_parameter_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&[])?;
    let sig = Signature::new(
        vec![PortSpec::new("labels", PortType::vector(DType::F64))],
        vec![PortSpec::new("value", PortType::scalar(DType::F64))],
    );
    Ok(FnOp::new(sig, |_, inputs| {
        Ok(vec![Tensor::scalar_f64(mcg_order_parameter(f64s(&inputs[0], "labels")?) as f64)])
    })
    .boxed())
}

pub(crate) fn register(c: &mut Catalog) {
    c.register("filter_guests", "hydrate", "guest pairs within a cutoff", filter_guests_node);
    c.register("filter_waters", "hydrate", "waters inside the double cone of each guest pair", filter_waters_node);
    c.register("hbonds_filtered", "hydrate", "geometric hydrogen bonds among selected waters", hbonds_filtered_node);
    c.register("reconnect_water", "hydrate", "turn (H, O') bonds into (O, O') bonds", reconnect_water_node);
    c.register("find_links", "hydrate", "simple cycles of a fixed length", find_links_node);
    c.register("register_hydrate", "hydrate", "label coordinated guests and their ring waters", register_hydrate_node);
    c.register("mcg_order_parameter", "hydrate", "count of labeled molecules", mcg_order_parameter_node);
}
