//! Host wire protocol.
//!
//! Control messages are single JSON lines tagged by `type`. Tensor payloads
//! follow EXEC and OUT lines, one per port in manifest order:
//!
//! ```text
//! "AVTN" | dtype u8 | rank u8 | reserved u16 = 0 | dims u64 LE × rank | data LE
//! ```

use std::io::{self, BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::Manifest;
use crate::tensor::{element_count, DType, Tensor, TensorData};

pub const PROTOCOL_VERSION: u32 = 1;
pub const MAGIC: &[u8; 4] = b"AVTN";
/// Upper bound on elements in one payload, to reject corrupt headers early.
pub const MAX_ELEMENTS: usize = 1 << 28;
const MAX_LINE: usize = 16 << 20;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("peer closed the stream")]
    Closed,
    #[error("bad tensor magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unknown dtype code {0}")]
    BadDType(u8),
    #[error("reserved header field is {0}, expected 0")]
    BadReserved(u16),
    #[error("payload of {0} elements exceeds the limit")]
    TooLarge(u128),
    #[error("malformed control line: {0}")]
    BadControl(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "UPPERCASE")]
pub enum Control {
    Hello {
        protocol: u32,
    },
    Describe {
        manifest: Manifest,
    },
    Exec {
        call_id: u64,
        frame: u64,
        #[serde(default, skip_serializing_if = "Map::is_empty")]
        params: Map<String, Value>,
    },
    Out {
        call_id: u64,
    },
    Error {
        #[serde(default)]
        call_id: Option<u64>,
        message: String,
    },
    Bye {},
}

pub fn write_control(w: &mut impl Write, msg: &Control) -> Result<(), WireError> {
    let mut line = serde_json::to_vec(msg).map_err(|e| WireError::BadControl(e.to_string()))?;
    line.push(b'\n');
    w.write_all(&line)?;
    Ok(())
}

pub fn read_control(r: &mut impl BufRead) -> Result<Control, WireError> {
    let mut line = Vec::new();
    let n = r.by_ref().take(MAX_LINE as u64).read_until(b'\n', &mut line)?;
    if n == 0 {
        return Err(WireError::Closed);
    }
    if line.last() != Some(&b'\n') {
        return Err(WireError::BadControl("unterminated or oversized line".into()));
    }
    serde_json::from_slice(&line).map_err(|e| WireError::BadControl(format!("{e}: {}", String::from_utf8_lossy(&line).trim_end())))
}

pub fn encode_tensor(w: &mut impl Write, t: &Tensor) -> Result<(), WireError> {
    w.write_all(&encode_to_vec(t))?;
    Ok(())
}

pub fn encode_to_vec(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * t.rank() + 8 * t.len());
    out.extend_from_slice(MAGIC);
    out.push(t.dtype().code());
    out.push(t.rank() as u8);
    out.extend_from_slice(&0u16.to_le_bytes());
    for &d in t.shape() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    match t.data() {
        TensorData::I64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_bits().to_le_bytes())),
    }
    out
}

pub fn decode_tensor(r: &mut impl Read) -> Result<Tensor, WireError> {
    let mut head = [0u8; 8];
    r.read_exact(&mut head).map_err(eof_is_closed)?;
    let magic = [head[0], head[1], head[2], head[3]];
    if &magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    let dtype = DType::from_code(head[4]).ok_or(WireError::BadDType(head[4]))?;
    let rank = head[5] as usize;
    let reserved = u16::from_le_bytes([head[6], head[7]]);
    if reserved != 0 {
        return Err(WireError::BadReserved(reserved));
    }
    let mut shape = Vec::with_capacity(rank);
    let mut total: u128 = 1;
    for _ in 0..rank {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(eof_is_closed)?;
        let d = u64::from_le_bytes(b);
        total = total.saturating_mul(d as u128);
        shape.push(d as usize);
    }
    if total > MAX_ELEMENTS as u128 {
        return Err(WireError::TooLarge(total));
    }
    let n = element_count(&shape);
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes).map_err(eof_is_closed)?;
    let words = bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap()));
    let data = match dtype {
        DType::I64 => TensorData::I64(words.map(|w| w as i64).collect()),
        DType::F64 => TensorData::F64(words.map(f64::from_bits).collect()),
    };
    Ok(Tensor::new(shape, data).expect("element count matches shape"))
}

fn eof_is_closed(e: io::Error) -> WireError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        WireError::Closed
    } else {
        WireError::Io(e)
    }
}
