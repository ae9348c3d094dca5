//! Conversions between port tensors and the shapes node code works with.

use super::NodeError;
use crate::model::{Frame, PeriodicCell};
use crate::tensor::Tensor;

pub fn f64s<'t>(t: &'t Tensor, port: &str) -> Result<&'t [f64], NodeError> {
    t.as_f64().ok_or_else(|| NodeError::DTypeMismatch {
        port: port.to_string(),
        expected: "f64".into(),
        actual: t.dtype().to_string(),
    })
}

pub fn i64s<'t>(t: &'t Tensor, port: &str) -> Result<&'t [i64], NodeError> {
    t.as_i64().ok_or_else(|| NodeError::DTypeMismatch {
        port: port.to_string(),
        expected: "i64".into(),
        actual: t.dtype().to_string(),
    })
}

pub fn expect_rank(t: &Tensor, rank: usize) -> Result<(), NodeError> {
    if t.rank() != rank {
        return Err(NodeError::RankMismatch {
            expected: rank,
            actual: t.rank(),
        });
    }
    Ok(())
}

pub fn expect_cols(t: &Tensor, cols: usize) -> Result<usize, NodeError> {
    match t.shape() {
        [rows, c] if *c == cols => Ok(*rows),
        other => Err(NodeError::ShapeMismatch {
            expected: vec![other.first().copied().unwrap_or(0), cols],
            actual: other.to_vec(),
        }),
    }
}

pub fn same_len(a: usize, b: usize) -> Result<(), NodeError> {
    if a != b {
        return Err(NodeError::ShapeMismatch {
            expected: vec![a],
            actual: vec![b],
        });
    }
    Ok(())
}

pub fn rows3(t: &Tensor, port: &str) -> Result<Vec<[f64; 3]>, NodeError> {
    expect_cols(t, 3)?;
    Ok(f64s(t, port)?
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect())
}

pub fn index(value: i64, len: usize) -> Result<usize, NodeError> {
    if value < 0 || value as usize >= len {
        return Err(NodeError::IndexOutOfRange { index: value, len });
    }
    Ok(value as usize)
}

pub fn indices(t: &Tensor, port: &str, len: usize) -> Result<Vec<usize>, NodeError> {
    i64s(t, port)?.iter().map(|&v| index(v, len)).collect()
}

/// Rows of a `K×2` index tensor, each checked against `len`.
pub fn pairs(t: &Tensor, port: &str, len: usize) -> Result<Vec<(usize, usize)>, NodeError> {
    expect_cols(t, 2)?;
    i64s(t, port)?
        .chunks_exact(2)
        .map(|c| Ok((index(c[0], len)?, index(c[1], len)?)))
        .collect()
}

pub fn cell(frame: &Frame) -> Result<PeriodicCell, NodeError> {
    Ok(PeriodicCell::from_box(&frame.sim_box)?)
}

pub fn positions_tensor(rows: &[[f64; 3]]) -> Tensor {
    let flat = rows.iter().flatten().copied().collect();
    Tensor::from_f64(vec![rows.len(), 3], flat).expect("row-major N×3")
}

pub fn index_tensor(values: &[usize]) -> Tensor {
    Tensor::vector_i64(values.iter().map(|&v| v as i64).collect())
}

pub fn pair_tensor(pairs: &[(usize, usize)]) -> Tensor {
    let flat = pairs.iter().flat_map(|&(a, b)| [a as i64, b as i64]).collect();
    Tensor::from_i64(vec![pairs.len(), 2], flat).expect("row-major K×2")
}

/// CSR layout: `offsets` has one more entry than there are rows.
pub fn csr_tensors(rows: &[Vec<usize>]) -> (Tensor, Tensor) {
    let mut offsets = Vec::with_capacity(rows.len() + 1);
    let mut flat = Vec::new();
    offsets.push(0i64);
    for row in rows {
        flat.extend(row.iter().map(|&v| v as i64));
        offsets.push(flat.len() as i64);
    }
    (Tensor::vector_i64(offsets), Tensor::vector_i64(flat))
}

/// Inverse of [`csr_tensors`].
pub fn csr_rows(offsets: &Tensor, values: &Tensor, len: usize) -> Result<Vec<Vec<usize>>, NodeError> {
    let offs = i64s(offsets, "offsets")?;
    let vals = i64s(values, "values")?;
    if offs.is_empty() || offs[0] != 0 || *offs.last().unwrap() as usize != vals.len() {
        return Err(NodeError::Invalid("malformed CSR offsets".into()));
    }
    offs.windows(2)
        .map(|w| {
            if w[1] < w[0] {
                return Err(NodeError::Invalid("CSR offsets decrease".into()));
            }
            vals[w[0] as usize..w[1] as usize]
                .iter()
                .map(|&v| index(v, len))
                .collect()
        })
        .collect()
}
