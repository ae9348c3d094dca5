//! Frame queries and attribute access.

use super::util::{f64s, index_tensor, positions_tensor, same_len};
use super::{AttrRead, FnOp, Implicit, Operation, ParamError, Params, ReadMode};
use crate::graph::{PortSpec, PortType, Signature};
use crate::tensor::{DType, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub enum PositionFilter {
    All,
    Visible,
    Region { min: [f64; 3], max: [f64; 3] },
}

pub fn get_positions(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["filter", "min", "max", "types"])?;
    let filter = match p.str_or("filter", "all")? {
        "all" => PositionFilter::All,
        "visible" => PositionFilter::Visible,
        "region" => {
            let min = p.opt_vec3("min")?.ok_or_else(|| ParamError::new("min", "required for region"))?;
            let max = p.opt_vec3("max")?.ok_or_else(|| ParamError::new("max", "required for region"))?;
            if (0..3).any(|k| min[k] > max[k]) {
                return Err(ParamError::new("max", "region needs min <= max on every axis"));
            }
            PositionFilter::Region { min, max }
        }
        other => return Err(ParamError::new("filter", format!("unknown filter `{other}`"))),
    };
    let types = match p.get("types") {
        Some(_) => Some(p.strings_or("types", &[])?),
        None => None,
    };
    let sig = Signature::new(
        vec![],
        vec![
            PortSpec::new("positions", PortType::rows_of(DType::F64, 3)),
            PortSpec::new("indices", PortType::vector(DType::I64)),
        ],
    );
    let implicit = Implicit {
        attributes: vec![],
        visibility: filter == PositionFilter::Visible,
    };
    Ok(FnOp::new(sig, move |ctx, _| {
        let frame = ctx.frame;
        let selected: Vec<usize> = (0..frame.atom_count())
            .filter(|&i| {
                types
                    .as_ref()
                    .is_none_or(|t| t.iter().any(|name| *name == frame.atom_types[i]))
            })
            .filter(|&i| match &filter {
                PositionFilter::All => true,
                PositionFilter::Visible => ctx.scene.is_visible(i),
                PositionFilter::Region { min, max } => {
                    let x = frame.positions[i];
                    (0..3).all(|k| min[k] <= x[k] && x[k] <= max[k])
                }
            })
            .collect();
        let rows: Vec<[f64; 3]> = selected.iter().map(|&i| frame.positions[i]).collect();
        Ok(vec![positions_tensor(&rows), index_tensor(&selected)])
    })
    .with_implicit(implicit)
    .boxed())
}

pub fn get_attribute(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["name", "mode", "init"])?;
    let name = p.required_str("name")?.to_string();
    let mode: ReadMode = p
        .str_or("mode", "frame")?
        .parse()
        .map_err(|e: String| ParamError::new("mode", e))?;
    let with_init = p.bool_or("init", false)?;
    let inputs = if with_init {
        vec![PortSpec::new("init", PortType::vector(DType::F64))]
    } else {
        vec![]
    };
    let sig = Signature::new(inputs, vec![PortSpec::new("values", PortType::vector(DType::F64))]);
    let implicit = Implicit {
        attributes: vec![AttrRead { name, mode }],
        visibility: false,
    };
    Ok(FnOp::new(sig, move |ctx, inputs| {
        if with_init && ctx.first_visit {
            let init = f64s(&inputs[0], "init")?;
            same_len(ctx.atom_count(), init.len())?;
            return Ok(vec![Tensor::vector_f64(init.to_vec())]);
        }
        Ok(vec![Tensor::vector_f64(ctx.attributes[0].clone())])
    })
    .with_implicit(implicit)
    .boxed())
}

pub fn set_attribute(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["name"])?;
    let name = p.required_str("name")?.to_string();
    let sig = Signature::new(vec![PortSpec::new("values", PortType::vector(DType::F64))], vec![]);
    Ok(FnOp::new(sig, move |ctx, inputs| {
        let values = f64s(&inputs[0], "values")?;
        if values.len() != ctx.atom_count() {
            return Err(crate::model::AttributeError::LengthMismatch {
                name: name.clone(),
                expected: ctx.atom_count(),
                actual: values.len(),
            }
            .into());
        }
        ctx.write_attribute(&name, values.to_vec());
        Ok(vec![])
    })
    .boxed())
}
