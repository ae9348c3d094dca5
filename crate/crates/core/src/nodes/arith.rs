//! Small elementwise utilities used to glue analysis graphs together.

use serde_json::Value;

use super::util::{f64s, i64s, rows3, same_len};
use super::{FnOp, NodeError, Operation, ParamError, Params};
use crate::graph::{PortSpec, PortType, Signature};
use crate::tensor::{DType, Tensor, TensorData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CompareOp {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "<" | "lt" => CompareOp::Lt,
            "<=" | "le" => CompareOp::Le,
            ">" | "gt" => CompareOp::Gt,
            ">=" | "ge" => CompareOp::Ge,
            "==" | "eq" => CompareOp::Eq,
            "!=" | "ne" => CompareOp::Ne,
            _ => return None,
        })
    }

    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CompareOp::Lt => a < b,
            CompareOp::Le => a <= b,
            CompareOp::Gt => a > b,
            CompareOp::Ge => a >= b,
            CompareOp::Eq => a == b,
            CompareOp::Ne => a != b,
        }
    }
}

/// Elementwise comparison against a threshold, as a 0/1 mask.
pub fn compare(values: &[f64], op: CompareOp, threshold: f64) -> Vec<i64> {
    values.iter().map(|&v| op.holds(v, threshold) as i64).collect()
}

fn as_f64_lossy(t: &Tensor) -> Vec<f64> {
    t.to_f64_vec()
}

fn typed(p: &Params, rank_key: &str, default_rank: usize) -> Result<(DType, usize), ParamError> {
    Ok((p.dtype_or("dtype", DType::F64)?, p.usize_or(rank_key, default_rank)?))
}

fn parse_const(value: &Value, dtype: DType) -> Result<Tensor, ParamError> {
    let err = || ParamError::new("value", "expected a number or a (nested) array of numbers");
    let (shape, flat): (Vec<usize>, Vec<&Value>) = match value {
        Value::Number(_) => (vec![], vec![value]),
        Value::Array(rows) if rows.iter().all(Value::is_number) => (vec![rows.len()], rows.iter().collect()),
        Value::Array(rows) => {
            let cols = rows.first().and_then(Value::as_array).map_or(0, Vec::len);
            let mut flat = Vec::new();
            for row in rows {
                let row = row.as_array().filter(|r| r.len() == cols).ok_or_else(err)?;
                flat.extend(row.iter());
            }
            (vec![rows.len(), cols], flat)
        }
        _ => return Err(err()),
    };
    let data = match dtype {
        DType::F64 => TensorData::F64(flat.iter().map(|v| v.as_f64().ok_or_else(err)).collect::<Result<_, _>>()?),
        DType::I64 => TensorData::I64(
            flat.iter()
                .map(|v| v.as_i64().ok_or_else(|| ParamError::new("value", "expected integers for dtype i64")))
                .collect::<Result<_, _>>()?,
        ),
    };
    Ok(Tensor::new(shape, data).expect("shape built from data"))
}

pub fn constant(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["value", "dtype"])?;
    let dtype = p.dtype_or("dtype", DType::F64)?;
    let value = p.get("value").ok_or_else(|| ParamError::new("value", "missing"))?;
    let t = parse_const(value, dtype)?;
    let sig = Signature::new(vec![], vec![PortSpec::new("value", PortType::fixed(dtype, t.shape().to_vec()))]);
    Ok(FnOp::new(sig, move |_, _| Ok(vec![t.clone()])).boxed())
}

fn binary(p: &Params, f64_op: fn(f64, f64) -> f64, i64_op: fn(i64, i64) -> i64) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["dtype", "rank", "rank_b"])?;
    let (dtype, rank) = typed(p, "rank", 1)?;
    let rank_b = p.usize_or("rank_b", rank)?;
    if rank_b != rank && rank_b != 0 {
        return Err(ParamError::new("rank_b", "must equal `rank` or be 0 for scalar broadcast"));
    }
    let sig = Signature::new(
        vec![
            PortSpec::new("a", PortType::new(dtype, rank)),
            PortSpec::new("b", PortType::new(dtype, rank_b)),
        ],
        vec![PortSpec::new("out", PortType::new(dtype, rank))],
    );
    Ok(FnOp::new(sig, move |_, inputs| {
        let (a, b) = (&inputs[0], &inputs[1]);
        let broadcast = b.rank() == 0;
        if !broadcast && a.shape() != b.shape() {
            return Err(NodeError::ShapeMismatch {
                expected: a.shape().to_vec(),
                actual: b.shape().to_vec(),
            });
        }
        let pick = |i: usize| if broadcast { 0 } else { i };
        let data = match dtype {
            DType::F64 => {
                let (x, y) = (f64s(a, "a")?, f64s(b, "b")?);
                TensorData::F64(x.iter().enumerate().map(|(i, &v)| f64_op(v, y[pick(i)])).collect())
            }
            DType::I64 => {
                let (x, y) = (i64s(a, "a")?, i64s(b, "b")?);
                TensorData::I64(x.iter().enumerate().map(|(i, &v)| i64_op(v, y[pick(i)])).collect())
            }
        };
        Ok(vec![Tensor::new(a.shape().to_vec(), data)?])
    })
    .boxed())
}

pub fn add(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    binary(p, |a, b| a + b, i64::wrapping_add)
}

pub fn mul(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    binary(p, |a, b| a * b, i64::wrapping_mul)
}

pub fn compare_mask(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["dtype", "rank", "op", "threshold"])?;
    let (dtype, rank) = typed(p, "rank", 1)?;
    let op_name = p.str_or("op", ">=")?;
    let op = CompareOp::parse(op_name).ok_or_else(|| ParamError::new("op", format!("unknown comparison `{op_name}`")))?;
    let threshold = p.f64_or("threshold", 0.0)?;
    let sig = Signature::new(
        vec![PortSpec::new("values", PortType::new(dtype, rank))],
        vec![PortSpec::new("mask", PortType::new(DType::I64, rank))],
    );
    Ok(FnOp::new(sig, move |_, inputs| {
        let t = &inputs[0];
        let mask = compare(&as_f64_lossy(t), op, threshold);
        Ok(vec![Tensor::from_i64(t.shape().to_vec(), mask)?])
    })
    .boxed())
}

pub fn count_nonzero(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["dtype", "rank"])?;
    let (dtype, rank) = typed(p, "rank", 1)?;
    let sig = Signature::new(
        vec![PortSpec::new("values", PortType::new(dtype, rank))],
        vec![PortSpec::new("count", PortType::scalar(DType::I64))],
    );
    Ok(FnOp::new(sig, |_, inputs| {
        let n = match inputs[0].data() {
            TensorData::F64(v) => v.iter().filter(|x| **x != 0.0).count(),
            TensorData::I64(v) => v.iter().filter(|x| **x != 0).count(),
        };
        Ok(vec![Tensor::scalar_i64(n as i64)])
    })
    .boxed())
}

/// Converts between dtypes; f64 to i64 truncates toward zero.
pub fn cast(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&["from", "to", "rank"])?;
    let from = p.dtype_or("from", DType::I64)?;
    let to = p.dtype_or("to", DType::F64)?;
    let rank = p.usize_or("rank", 1)?;
    let sig = Signature::new(
        vec![PortSpec::new("values", PortType::new(from, rank))],
        vec![PortSpec::new("out", PortType::new(to, rank))],
    );
    Ok(FnOp::new(sig, move |_, inputs| {
        let t = &inputs[0];
        let data = match (t.data(), to) {
            (TensorData::I64(v), DType::F64) => TensorData::F64(v.iter().map(|&x| x as f64).collect()),
            (TensorData::F64(v), DType::I64) => TensorData::I64(v.iter().map(|&x| x as i64).collect()),
            (d, _) => d.clone(),
        };
        Ok(vec![Tensor::new(t.shape().to_vec(), data)?])
    })
    .boxed())
}

/// Arithmetic mean of the rows selected by a nonzero mask.
pub fn masked_mean(positions: &[[f64; 3]], mask: &[i64]) -> Option<[f64; 3]> {
    let mut sum = [0.0; 3];
    let mut n = 0usize;
    for (p, _) in positions.iter().zip(mask).filter(|(_, m)| **m != 0) {
        for k in 0..3 {
            sum[k] += p[k];
        }
        n += 1;
    }
    (n > 0).then(|| sum.map(|s| s / n as f64))
}

pub fn masked_centroid(p: &Params) -> Result<Box<dyn Operation>, ParamError> {
    p.only(&[])?;
    let sig = Signature::new(
        vec![
            PortSpec::new("positions", PortType::rows_of(DType::F64, 3)),
            PortSpec::new("mask", PortType::vector(DType::I64)),
        ],
        vec![PortSpec::new("centroid", PortType::fixed(DType::F64, vec![3]))],
    );
    Ok(FnOp::new(sig, |_, inputs| {
        let pos = rows3(&inputs[0], "positions")?;
        let mask = i64s(&inputs[1], "mask")?;
        same_len(pos.len(), mask.len())?;
        let c = masked_mean(&pos, mask).ok_or(NodeError::EmptySelection)?;
        Ok(vec![Tensor::vector_f64(c.to_vec())])
    })
    .boxed())
}
