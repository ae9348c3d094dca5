use std::fmt;

use sha2::{Digest, Sha256};

use crate::nodes::Params;
use crate::tensor::{Tensor, TensorData};

/// Folded into every cache key so entries from other releases never match.
pub const ENGINE_VERSION: &str = concat!("mdflow-engine/", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub [u8; 32]);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({self})")
    }
}

/// SHA-256 over length-prefixed, tagged fields.
///
/// Prefixing every field keeps distinct field sequences from colliding by
/// concatenation.
pub struct FingerprintBuilder(Sha256);

impl Default for FingerprintBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl FingerprintBuilder {
    pub fn new() -> Self {
        let mut b = Self(Sha256::new());
        b.bytes(b"v", ENGINE_VERSION.as_bytes());
        b
    }

    pub fn bytes(&mut self, tag: &[u8], data: &[u8]) -> &mut Self {
        self.0.update((tag.len() as u64).to_le_bytes());
        self.0.update(tag);
        self.0.update((data.len() as u64).to_le_bytes());
        self.0.update(data);
        self
    }

    pub fn str(&mut self, tag: &[u8], s: &str) -> &mut Self {
        self.bytes(tag, s.as_bytes())
    }

    pub fn u64(&mut self, tag: &[u8], v: u64) -> &mut Self {
        self.bytes(tag, &v.to_le_bytes())
    }

    pub fn f64s(&mut self, tag: &[u8], values: &[f64]) -> &mut Self {
        let mut buf = Vec::with_capacity(values.len() * 8);
        for v in values {
            buf.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        self.bytes(tag, &buf)
    }

    pub fn tensor(&mut self, t: &Tensor) -> &mut Self {
        self.u64(b"dtype", t.dtype().code() as u64);
        let shape: Vec<u8> = t.shape().iter().flat_map(|&d| (d as u64).to_le_bytes()).collect();
        self.bytes(b"shape", &shape);
        match t.data() {
            TensorData::F64(v) => self.f64s(b"data", v),
            TensorData::I64(v) => {
                let buf: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
                self.bytes(b"data", &buf)
            }
        }
    }

    pub fn finish(self) -> Fingerprint {
        Fingerprint(self.0.finalize().into())
    }
}

/// Digest of a node invocation: kind, canonical params and input tensors.
pub fn fingerprint_inputs(kind: &str, params: &Params, inputs: &[Tensor]) -> Fingerprint {
    let mut b = FingerprintBuilder::new();
    b.str(b"kind", kind).str(b"params", &params.canonical_json());
    for t in inputs {
        b.tensor(t);
    }
    b.finish()
}
