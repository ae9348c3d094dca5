use std::collections::BTreeMap;

use thiserror::Error;

use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttributeError {
    #[error("attribute `{name}` expects {expected} values, got {actual}")]
    LengthMismatch {
        name: String,
        expected: usize,
        actual: usize,
    },
    #[error("attribute values must be a rank-1 f64 tensor")]
    NotAVector,
    #[error("attribute names must be non-empty")]
    EmptyName,
}

/// Named per-atom `f64` arrays, stored per frame.
///
/// A frame is "defined" for an attribute once something has been written to
/// it. Reading an undefined frame yields zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttributeStore {
    values: BTreeMap<String, BTreeMap<usize, Vec<f64>>>,
}

impl AttributeStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads `name` at `frame`, registering the name if it is unknown.
    pub fn read(&mut self, name: &str, frame: usize, n_atoms: usize) -> Tensor {
        if !name.is_empty() {
            self.values.entry(name.to_string()).or_default();
        }
        Tensor::vector_f64(self.values_or_zeros(name, frame, n_atoms))
    }

    pub fn values_or_zeros(&self, name: &str, frame: usize, n_atoms: usize) -> Vec<f64> {
        match self.get(name, frame) {
            Some(v) if v.len() == n_atoms => v.to_vec(),
            _ => vec![0.0; n_atoms],
        }
    }

    pub fn get(&self, name: &str, frame: usize) -> Option<&[f64]> {
        self.values.get(name)?.get(&frame).map(Vec::as_slice)
    }

    pub fn is_defined(&self, name: &str, frame: usize) -> bool {
        self.get(name, frame).is_some()
    }

    pub fn write(
        &mut self,
        name: &str,
        frame: usize,
        values: &Tensor,
        n_atoms: usize,
    ) -> Result<(), AttributeError> {
        let data = match (values.rank(), values.as_f64()) {
            (1, Some(v)) => v,
            _ => return Err(AttributeError::NotAVector),
        };
        self.write_slice(name, frame, data, n_atoms)
    }

    pub fn write_slice(
        &mut self,
        name: &str,
        frame: usize,
        values: &[f64],
        n_atoms: usize,
    ) -> Result<(), AttributeError> {
        if name.is_empty() {
            return Err(AttributeError::EmptyName);
        }
        if values.len() != n_atoms {
            return Err(AttributeError::LengthMismatch {
                name: name.to_string(),
                expected: n_atoms,
                actual: values.len(),
            });
        }
        self.values
            .entry(name.to_string())
            .or_default()
            .insert(frame, values.to_vec());
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn defined_frames(&self, name: &str) -> Vec<usize> {
        self.values
            .get(name)
            .map(|frames| frames.keys().copied().collect())
            .unwrap_or_default()
    }

    pub fn clear(&mut self) {
        self.values.clear();
    }
}
