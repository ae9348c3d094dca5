//! N-dimensional numeric array carried over graph connections.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Element type of a [`Tensor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    I64,
    F64,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::I64 => 0,
            DType::F64 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DType::I64),
            1 => Some(DType::F64),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::I64 => "i64",
            DType::F64 => "f64",
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "i64" => Ok(DType::I64),
            "f64" => Ok(DType::F64),
            other => Err(format!("unknown dtype `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    I64(Vec<i64>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::I64(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("shape mismatch: {expected:?} holds {expected_len} values, got {actual_len}")]
    ShapeMismatch {
        expected: Vec<usize>,
        expected_len: usize,
        actual_len: usize,
    },
    #[error("cannot reshape {from:?} into {to:?}")]
    Reshape { from: Vec<usize>, to: Vec<usize> },
}

/// Row-major n-dimensional array of `i64` or `f64` values.
///
/// Rank 0 is a scalar holding exactly one value.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: TensorData,
}

pub fn element_count(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: TensorData) -> Result<Self, TensorError> {
        let expected_len = element_count(&shape);
        if expected_len != data.len() {
            return Err(TensorError::ShapeMismatch {
                expected: shape,
                expected_len,
                actual_len: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn from_f64(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        Self::new(shape, TensorData::F64(data))
    }

    pub fn from_i64(shape: Vec<usize>, data: Vec<i64>) -> Result<Self, TensorError> {
        Self::new(shape, TensorData::I64(data))
    }

    pub fn scalar_f64(value: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: TensorData::F64(vec![value]),
        }
    }

    pub fn scalar_i64(value: i64) -> Self {
        Self {
            shape: Vec::new(),
            data: TensorData::I64(vec![value]),
        }
    }

    pub fn vector_f64(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data: TensorData::F64(data),
        }
    }

    pub fn vector_i64(data: Vec<i64>) -> Self {
        Self {
            shape: vec![data.len()],
            data: TensorData::I64(data),
        }
    }

    /// `rows × cols` matrix from row-major data.
    pub fn matrix_f64(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        Self::from_f64(vec![rows, cols], data)
    }

    pub fn matrix_i64(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self, TensorError> {
        Self::from_i64(vec![rows, cols], data)
    }

    pub fn zeros(dtype: DType, shape: Vec<usize>) -> Self {
        let n = element_count(&shape);
        let data = match dtype {
            DType::I64 => TensorData::I64(vec![0; n]),
            DType::F64 => TensorData::F64(vec![0.0; n]),
        };
        Self { shape, data }
    }

    pub fn dtype(&self) -> DType {
        match self.data {
            TensorData::I64(_) => DType::I64,
            TensorData::F64(_) => DType::F64,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn into_data(self) -> TensorData {
        self.data
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match &self.data {
            TensorData::F64(v) => Some(v),
            TensorData::I64(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<&[i64]> {
        match &self.data {
            TensorData::I64(v) => Some(v),
            TensorData::F64(_) => None,
        }
    }

    /// Values converted to `f64` regardless of dtype.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match &self.data {
            TensorData::F64(v) => v.clone(),
            TensorData::I64(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }

    pub fn reshape(&self, new_shape: Vec<usize>) -> Result<Self, TensorError> {
        if element_count(&new_shape) != element_count(&self.shape) {
            return Err(TensorError::Reshape {
                from: self.shape.clone(),
                to: new_shape,
            });
        }
        Ok(Self {
            shape: new_shape,
            data: self.data.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reshape_vector_to_matrix() {
        let t = Tensor::vector_f64(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = t.reshape(vec![2, 3]).unwrap();
        assert_eq!(r.shape(), &[2, 3]);
        assert_eq!(r.as_f64().unwrap(), t.as_f64().unwrap());
    }

    #[test]
    fn reshape_identity() {
        let t = Tensor::vector_i64(vec![1, 2, 3, 4]);
        assert_eq!(t.reshape(vec![4]).unwrap(), t);
    }

    #[test]
    fn reshape_mismatch() {
        let t = Tensor::vector_f64(vec![1.0, 2.0, 3.0]);
        assert!(matches!(t.reshape(vec![2, 2]), Err(TensorError::Reshape { .. })));
    }

    #[test]
    fn scalar_has_one_value() {
        let s = Tensor::scalar_f64(2.5);
        assert_eq!(s.rank(), 0);
        assert_eq!(s.len(), 1);
        assert!(Tensor::from_f64(vec![], vec![]).is_err());
    }

    #[test]
    fn zero_extent_is_empty() {
        let t = Tensor::zeros(DType::F64, vec![0, 3]);
        assert!(t.is_empty());
        assert_eq!(t.shape(), &[0, 3]);
    }

    fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0usize..5, 0..4)
    }

    proptest! {
        #[test]
        fn reshape_round_trip(shape in shape_strategy(), flat_first in any::<bool>()) {
            let n = element_count(&shape);
            let t = Tensor::from_f64(shape.clone(), (0..n).map(|i| i as f64 * 0.5).collect()).unwrap();
            let other = if flat_first { vec![n] } else { vec![1, n] };
            let back = t.reshape(other).unwrap().reshape(shape).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
