//! Cluster detection and tracking.
//!
//! Neighbor lists feed connected-component labeling; a recurrent label
//! follows one cluster through the trajectory and a fading color channel
//! shows atoms joining or leaving it.

mod components;
mod neighbors;
mod tracking;

pub use components::{group_list, mode_mask, UnionFind};
pub use neighbors::{brute_force_pairs, list_neighbors, NeighborList, BRUTE_FORCE_LIMIT};
pub use tracking::{channel_to_rgba, combine_channels, labels2colors, track_cluster, DEFAULT_FADE_STEP};

use crate::graph::{PortSpec, PortType, Signature};
use crate::nodes::util::{cell, csr_rows, csr_tensors, f64s, i64s, rows3};
use crate::nodes::{Catalog, FnOp, NodeError, Operation, ParamError, Params};
use crate::tensor::{DType, Tensor};

fn vec_f64(name: &str) -> PortSpec {
    PortSpec::new(name, PortType::vector(DType::F64))
}

fn vec_i64(name: &str) -> PortSpec {
    PortSpec::new(name, PortType::vector(DType::I64))
}

fn list_neighbors_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["cutoff"])?;
    let cutoff = p
        .opt_f64("cutoff")?
        .ok_or_else(|| ParamError::new("cutoff", "missing"))?;
    if !(cutoff > 0.0) {
        return Err(ParamError::new("cutoff", "must be positive"));
    }
    let sig = Signature::new(
        vec![PortSpec::new("positions", PortType::rows_of(DType::F64, 3))],
        vec![vec_i64("offsets"), vec_i64("neighbors")],
    );
    Ok(FnOp::new(sig, move |ctx, inputs| {
        let pos = rows3(&inputs[0], "positions")?;
        let nl = list_neighbors(&pos, &cell(ctx.frame)?, cutoff)?;
        let rows: Vec<Vec<usize>> = (0..nl.atom_count()).map(|i| nl.row(i).to_vec()).collect();
        let (o, n) = csr_tensors(&rows);
        Ok(vec![o, n])
    })
    .boxed())
}

fn group_list_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&[])?;
    let sig = Signature::new(vec![vec_i64("offsets"), vec_i64("neighbors")], vec![vec_i64("ids")]);
    Ok(FnOp::new(sig, |_, inputs| {
        let n = i64s(&inputs[0], "offsets")?.len().saturating_sub(1);
        let rows = csr_rows(&inputs[0], &inputs[1], n)?;
        let ids = group_list(&NeighborList::from_rows(rows));
        Ok(vec![Tensor::vector_i64(ids.into_iter().map(|v| v as i64).collect())])
    })
    .boxed())
}

fn mode_mask_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&[])?;
    let sig = Signature::new(vec![vec_i64("ids")], vec![vec_i64("mask")]);
    Ok(FnOp::new(sig, |_, inputs| Ok(vec![Tensor::vector_i64(mode_mask(i64s(&inputs[0], "ids")?))])).boxed())
}

fn track_cluster_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["min_size"])?;
    let min_size = p.usize_or("min_size", 1)?;
    let sig = Signature::new(vec![vec_i64("ids"), vec_f64("prev")], vec![vec_f64("labels")]);
    Ok(FnOp::new(sig, move |_, inputs| {
        let out = track_cluster(i64s(&inputs[0], "ids")?, f64s(&inputs[1], "prev")?, min_size)?;
        Ok(vec![Tensor::vector_f64(out)])
    })
    .boxed())
}

fn labels2colors_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["step"])?;
    let step = p.f64_or("step", DEFAULT_FADE_STEP)?;
    if !(step > 0.0 && step <= 1.0) {
        return Err(ParamError::new("step", format!("{step} outside (0, 1]")));
    }
    let sig = Signature::new(vec![vec_f64("labels"), vec_f64("prev")], vec![vec_f64("channel")]);
    Ok(FnOp::new(sig, move |_, inputs| {
        let out = labels2colors(f64s(&inputs[0], "labels")?, f64s(&inputs[1], "prev")?, step)?;
        Ok(vec![Tensor::vector_f64(out)])
    })
    .boxed())
}

fn combine_channels_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&[])?;
    let sig = Signature::new(vec![vec_f64("a"), vec_f64("b")], vec![vec_f64("channel")]);
    Ok(FnOp::new(sig, |_, inputs| {
        Ok(vec![Tensor::vector_f64(combine_channels(f64s(&inputs[0], "a")?, f64s(&inputs[1], "b")?)?)])
    })
    .boxed())
}

fn channel_to_rgba_node(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&[])?;
    let sig = Signature::new(vec![vec_f64("channel")], vec![PortSpec::new("colors", PortType::rows_of(DType::F64, 4))]);
    Ok(FnOp::new(sig, |_, inputs| {
        let c = f64s(&inputs[0], "channel")?;
        if c.iter().any(|v| v.is_nan()) {
            return Err(NodeError::NonFinite);
        }
        let flat = c.iter().flat_map(|&v| channel_to_rgba(v)).collect();
        Ok(vec![Tensor::from_f64(vec![c.len(), 4], flat)?])
    })
    .boxed())
}

pub(crate) fn register(c: &mut Catalog) {
    c.register("list_neighbors", "cluster", "neighbor lists within a cutoff (CSR)", list_neighbors_node);
    c.register("group_list", "cluster", "connected-component id per atom", group_list_node);
    c.register("mode_mask", "cluster", "mask of the most frequent id", mode_mask_node);
    c.register("track_cluster", "cluster", "carry a label to the most overlapping cluster", track_cluster_node);
    c.register("labels2colors", "cluster", "fade a channel toward labeled/unlabeled", labels2colors_node);
    c.register("combine_channels", "cluster", "elementwise maximum of two channels", combine_channels_node);
    c.register("channel_to_rgba", "cluster", "blue-to-red colors from a channel", channel_to_rgba_node);
}
