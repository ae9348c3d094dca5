use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tensor::{DType, Tensor};

/// Static type of a node port.
///
/// `dims` is either empty (every extent free) or holds one entry per axis,
/// where `None` leaves that axis free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortType {
    pub dtype: DType,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dims: Vec<Option<usize>>,
}

impl PortType {
    pub fn new(dtype: DType, rank: usize) -> Self {
        Self {
            dtype,
            rank,
            dims: Vec::new(),
        }
    }

    pub fn scalar(dtype: DType) -> Self {
        Self::new(dtype, 0)
    }

    pub fn vector(dtype: DType) -> Self {
        Self::new(dtype, 1)
    }

    /// Rank-2 type with a fixed column count, e.g. `f64[?,3]`.
    pub fn rows_of(dtype: DType, cols: usize) -> Self {
        Self {
            dtype,
            rank: 2,
            dims: vec![None, Some(cols)],
        }
    }

    pub fn fixed(dtype: DType, dims: Vec<usize>) -> Self {
        Self {
            dtype,
            rank: dims.len(),
            dims: dims.into_iter().map(Some).collect(),
        }
    }

    fn extent(&self, axis: usize) -> Option<usize> {
        self.dims.get(axis).copied().flatten()
    }

    /// Connection rule: equal dtype and rank, and no disagreeing fixed extent.
    pub fn compatible_with(&self, target: &PortType) -> bool {
        self.dtype == target.dtype
            && self.rank == target.rank
            && (0..self.rank).all(|axis| match (self.extent(axis), target.extent(axis)) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            })
    }

    pub fn accepts(&self, t: &Tensor) -> bool {
        t.dtype() == self.dtype
            && t.rank() == self.rank
            && t
                .shape()
                .iter()
                .enumerate()
                .all(|(axis, &n)| self.extent(axis).is_none_or(|e| e == n))
    }
}

impl fmt::Display for PortType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dtype)?;
        if self.rank == 0 {
            return Ok(());
        }
        let axes: Vec<String> = (0..self.rank)
            .map(|axis| match self.extent(axis) {
                Some(n) => n.to_string(),
                None => "?".to_string(),
            })
            .collect();
        write!(f, "[{}]", axes.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSpec {
    pub name: String,
    #[serde(flatten)]
    pub ty: PortType,
}

impl PortSpec {
    pub fn new(name: impl Into<String>, ty: PortType) -> Self {
        Self {
            name: name.into(),
            ty,
        }
    }
}

/// Input and output ports of a node, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub inputs: Vec<PortSpec>,
    pub outputs: Vec<PortSpec>,
}

impl Signature {
    pub fn new(inputs: Vec<PortSpec>, outputs: Vec<PortSpec>) -> Self {
        Self { inputs, outputs }
    }

    pub fn input(&self, name: &str) -> Option<(usize, &PortSpec)> {
        self.inputs.iter().enumerate().find(|(_, p)| p.name == name)
    }

    pub fn output(&self, name: &str) -> Option<(usize, &PortSpec)> {
        self.outputs.iter().enumerate().find(|(_, p)| p.name == name)
    }
}
