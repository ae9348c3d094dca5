//! Host side of the protocol, plus reference behaviors.
//!
//! The loopback host and the `mdflow-refhost` binary both run [`serve`]
//! with one of the functions from [`behavior`].

use std::io::{BufRead, Write};

use serde_json::{Map, Value};

use super::wire::{decode_tensor, encode_tensor, read_control, write_control, Control, WireError, PROTOCOL_VERSION};
use super::Manifest;
use crate::tensor::Tensor;

pub type Behavior = fn(u64, &Map<String, Value>, &[Tensor]) -> Result<Vec<Tensor>, String>;

/// Knobs for exercising failure paths in tests.
#[derive(Debug, Clone, Default)]
pub struct ServeQuirks {
    /// Declare one more output than the script has.
    pub extra_port: bool,
    /// Never answer EXEC.
    pub hang_on_exec: bool,
    /// Keep running after BYE until killed.
    pub ignore_bye: bool,
}

/// Serves one client until BYE or end of input.
pub fn serve(
    reader: &mut impl BufRead,
    writer: &mut impl Write,
    manifest: &Manifest,
    behavior: Behavior,
    quirks: &ServeQuirks,
) -> Result<(), WireError> {
    let mut described = manifest.clone();
    if quirks.extra_port {
        described.ports.push(super::PortDecl {
            direction: super::PortDirection::Out,
            name: "extra".into(),
            dtype: crate::tensor::DType::F64,
            rank: 0,
        });
    }
    let n_in = manifest.inputs().len();
    loop {
        let msg = match read_control(reader) {
            Ok(m) => m,
            Err(WireError::Closed) => return Ok(()),
            Err(e) => return Err(e),
        };
        match msg {
            Control::Hello { protocol } => {
                if protocol != PROTOCOL_VERSION {
                    write_control(writer, &Control::Error {
                        call_id: None,
                        message: format!("unsupported protocol {protocol}"),
                    })?;
                    writer.flush()?;
                    return Ok(());
                }
                write_control(writer, &Control::Hello { protocol: PROTOCOL_VERSION })?;
                write_control(writer, &Control::Describe { manifest: described.clone() })?;
                writer.flush()?;
            }
            Control::Exec { call_id, frame, params } => {
                let mut inputs = Vec::with_capacity(n_in);
                for _ in 0..n_in {
                    inputs.push(decode_tensor(reader)?);
                }
                if quirks.hang_on_exec {
                    loop {
                        std::thread::park();
                    }
                }
                match behavior(frame, &params, &inputs) {
                    Ok(outs) => {
                        write_control(writer, &Control::Out { call_id })?;
                        for t in &outs {
                            encode_tensor(writer, t)?;
                        }
                    }
                    Err(message) => write_control(writer, &Control::Error {
                        call_id: Some(call_id),
                        message,
                    })?,
                }
                writer.flush()?;
            }
            Control::Bye {} => {
                if quirks.ignore_bye {
                    loop {
                        std::thread::park();
                    }
                }
                return Ok(());
            }
            other => {
                return Err(WireError::BadControl(format!("unexpected message from engine: {other:?}")));
            }
        }
    }
}

pub mod behavior {
    //! Reference node bodies used by conformance tests.

    use serde_json::{Map, Value};

    use super::Behavior;
    use crate::tensor::Tensor;

    pub fn by_name(name: &str) -> Option<Behavior> {
        Some(match name {
            "sine" => sine,
            "differentiate" => differentiate,
            "decay" => decay,
            "echo" => echo,
            "add" => add,
            "fail" => fail,
            "xyz" => xyz,
            _ => return None,
        })
    }

    pub const NAMES: &[&str] = &["sine", "differentiate", "decay", "echo", "add", "fail", "xyz"];

    fn f64s<'a>(t: &'a Tensor, what: &str) -> Result<&'a [f64], String> {
        t.as_f64().ok_or_else(|| format!("{what}: expected f64"))
    }

    fn arg<'a>(inputs: &'a [Tensor], i: usize) -> Result<&'a Tensor, String> {
        inputs.get(i).ok_or_else(|| format!("missing input {i}"))
    }

    /// `wave[i] = sin(2π i / n)` for a scalar i64 length `n`.
    pub fn sine(_: u64, _: &Map<String, Value>, inputs: &[Tensor]) -> Result<Vec<Tensor>, String> {
        let n = arg(inputs, 0)?
            .as_i64()
            .and_then(|v| v.first().copied())
            .ok_or("length: expected an i64 scalar")?;
        if n < 0 {
            return Err(format!("length must be non-negative, got {n}"));
        }
        let wave = (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin()).collect();
        Ok(vec![Tensor::vector_f64(wave)])
    }

    /// Forward differences `x[i+1] - x[i]`.
    pub fn differentiate(_: u64, _: &Map<String, Value>, inputs: &[Tensor]) -> Result<Vec<Tensor>, String> {
        let x = f64s(arg(inputs, 0)?, "signal")?;
        Ok(vec![Tensor::vector_f64(x.windows(2).map(|w| w[1] - w[0]).collect())])
    }

    /// `s[i] · d^i` with `d` taken from the `decay` parameter.
    pub fn decay(_: u64, params: &Map<String, Value>, inputs: &[Tensor]) -> Result<Vec<Tensor>, String> {
        let s = f64s(arg(inputs, 0)?, "signal")?;
        let d = params.get("decay").and_then(Value::as_f64).ok_or("missing numeric param `decay`")?;
        Ok(vec![Tensor::vector_f64(s.iter().enumerate().map(|(i, v)| v * d.powi(i as i32)).collect())])
    }

    pub fn echo(_: u64, _: &Map<String, Value>, inputs: &[Tensor]) -> Result<Vec<Tensor>, String> {
        Ok(inputs.to_vec())
    }

    pub fn add(_: u64, _: &Map<String, Value>, inputs: &[Tensor]) -> Result<Vec<Tensor>, String> {
        let a = f64s(arg(inputs, 0)?, "a")?;
        let b = f64s(arg(inputs, 1)?, "b")?;
        if a.len() != b.len() {
            return Err(format!("length mismatch: {} vs {}", a.len(), b.len()));
        }
        let shape = inputs[0].shape().to_vec();
        let sum = a.iter().zip(b).map(|(x, y)| x + y).collect();
        Tensor::from_f64(shape, sum).map(|t| vec![t]).map_err(|e| e.to_string())
    }

    pub fn fail(_: u64, _: &Map<String, Value>, _: &[Tensor]) -> Result<Vec<Tensor>, String> {
        Err("node raised at line 7".into())
    }

    /// Importer host for XYZ files; the path comes from the `path` param.
    pub fn xyz(frame: u64, params: &Map<String, Value>, _: &[Tensor]) -> Result<Vec<Tensor>, String> {
        let path = params.get("path").and_then(Value::as_str).ok_or("missing `path` param")?;
        let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
        crate::script::xyz_frame(&text, frame as usize)
    }
}
