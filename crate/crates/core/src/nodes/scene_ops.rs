//! Nodes that mutate the frame's scene delta.

use super::util::{expect_cols, f64s, indices, pairs, same_len};
use super::{AttrRead, FnOp, Implicit, NodeError, Operation, ParamError, Params, ReadMode};
use crate::graph::{PortSpec, PortType, Signature};
use crate::scene::SceneOp;
use crate::tensor::DType;

pub fn set_colors(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&[])?;
    let sig = Signature::new(
        vec![
            PortSpec::new("indices", PortType::vector(DType::I64)),
            PortSpec::new("colors", PortType::rows_of(DType::F64, 4)),
        ],
        vec![],
    );
    Ok(FnOp::new(sig, |ctx, inputs| {
        let idx = indices(&inputs[0], "indices", ctx.atom_count())?;
        let rows = expect_cols(&inputs[1], 4)?;
        same_len(idx.len(), rows)?;
        let colors = f64s(&inputs[1], "colors")?;
        if let Some(&bad) = colors.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(NodeError::ComponentOutOfRange { value: bad });
        }
        let entries = idx
            .into_iter()
            .zip(colors.chunks_exact(4))
            .map(|(i, c)| (i, [c[0], c[1], c[2], c[3]]))
            .collect();
        ctx.scene(SceneOp::SetColors(entries));
        Ok(vec![])
    })
    .boxed())
}

/// Atoms whose attribute value lies outside `[lo, hi]` are hidden.
pub fn show_range_hidden(values: &[f64], lo: f64, hi: f64) -> Result<Vec<usize>, NodeError> {
    if lo > hi {
        return Err(NodeError::BadRange { lo, hi });
    }
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, &v)| !(lo <= v && v <= hi))
        .map(|(i, _)| i)
        .collect())
}

pub fn show_range(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["attribute", "lo", "hi", "mode"])?;
    let name = p.required_str("attribute")?.to_string();
    let lo = p.opt_f64("lo")?.unwrap_or(f64::NEG_INFINITY);
    let hi = p.opt_f64("hi")?.unwrap_or(f64::INFINITY);
    if lo > hi {
        return Err(ParamError::new("lo", format!("lo {lo} exceeds hi {hi}")));
    }
    let mode: ReadMode = p
        .str_or("mode", "frame")?
        .parse()
        .map_err(|e: String| ParamError::new("mode", e))?;
    let implicit = Implicit {
        attributes: vec![AttrRead { name, mode }],
        visibility: false,
    };
    Ok(FnOp::new(Signature::default(), move |ctx, _| {
        let hidden = show_range_hidden(&ctx.attributes[0], lo, hi)?;
        ctx.scene(SceneOp::Hide(hidden));
        Ok(vec![])
    })
    .with_implicit(implicit)
    .boxed())
}

pub fn set_radius_scale(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&[])?;
    let sig = Signature::new(
        vec![
            PortSpec::new("indices", PortType::vector(DType::I64)),
            PortSpec::new("scales", PortType::vector(DType::F64)),
        ],
        vec![],
    );
    Ok(FnOp::new(sig, |ctx, inputs| {
        let idx = indices(&inputs[0], "indices", ctx.atom_count())?;
        let scales = f64s(&inputs[1], "scales")?;
        same_len(idx.len(), scales.len())?;
        if let Some(&bad) = scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(NodeError::NonPositiveScale { value: bad });
        }
        ctx.scene(SceneOp::SetRadiusScales(idx.into_iter().zip(scales.iter().copied()).collect()));
        Ok(vec![])
    })
    .boxed())
}

pub fn extra_bonds(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&[])?;
    let sig = Signature::new(vec![PortSpec::new("pairs", PortType::rows_of(DType::I64, 2))], vec![]);
    Ok(FnOp::new(sig, |ctx, inputs| {
        let list = pairs(&inputs[0], "pairs", ctx.atom_count())?;
        if let Some(&(a, _)) = list.iter().find(|(a, b)| a == b) {
            return Err(NodeError::SelfBond { atom: a as i64 });
        }
        ctx.scene(SceneOp::ExtraBonds(list));
        Ok(vec![])
    })
    .boxed())
}

pub fn set_camera_center(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&[])?;
    let sig = Signature::new(vec![PortSpec::new("center", PortType::fixed(DType::F64, vec![3]))], vec![]);
    Ok(FnOp::new(sig, |ctx, inputs| {
        let c = f64s(&inputs[0], "center")?;
        same_len(3, c.len())?;
        if c.iter().any(|v| !v.is_finite()) {
            return Err(NodeError::NonFinite);
        }
        ctx.scene(SceneOp::CameraCenter([c[0], c[1], c[2]]));
        Ok(vec![])
    })
    .boxed())
}
