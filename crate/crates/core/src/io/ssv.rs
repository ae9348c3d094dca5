//! Generic space-separated values (SSV) trajectories.
//!
//! ```text
//! el x y z rotx roty rotz pot
//! frame 2 10 10 10
//! C 0 0 0 1 0 0 -1.5
//! C 1 0 0 0 1 0 -1.25
//! ```
//!
//! The first line names the columns. `el`, `x`, `y`, `z` are recognized;
//! every other token declares a per-atom attribute. Each frame starts with
//! `frame <natoms> <Lx> <Ly> <Lz>`; an edge of `0` marks a non-periodic axis.
//! Floats are written in shortest round-trip form.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};

use super::source::{numbered_lines, FormatIndex, FrameSpan, IndexedSource, Layout, LineScanner, MemorySource, NumberedLines};
use super::ImportError;
use crate::model::{Frame, SimBox, Trajectory};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Element,
    X,
    Y,
    Z,
    Attribute(String),
}

impl Column {
    fn token(&self) -> &str {
        match self {
            Column::Element => "el",
            Column::X => "x",
            Column::Y => "y",
            Column::Z => "z",
            Column::Attribute(name) => name,
        }
    }
}

/// Ordered column layout declared by the header line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    columns: Vec<Column>,
}

impl ColumnSpec {
    pub fn parse(line: &str) -> Result<Self, ImportError> {
        let mut columns = Vec::new();
        let mut seen = HashSet::new();
        for token in line.split_whitespace() {
            if !seen.insert(token) {
                return Err(ImportError::BadHeader(format!("column `{token}` declared twice")));
            }
            columns.push(match token {
                "el" => Column::Element,
                "x" => Column::X,
                "y" => Column::Y,
                "z" => Column::Z,
                other => Column::Attribute(other.to_string()),
            });
        }
        for axis in ["x", "y", "z"] {
            if !seen.contains(axis) {
                return Err(ImportError::BadHeader(format!("missing coordinate column `{axis}`")));
            }
        }
        Ok(Self { columns })
    }

    /// `el x y z` followed by the given attribute columns.
    pub fn with_attributes<S: AsRef<str>>(attributes: &[S]) -> Result<Self, ImportError> {
        let mut header = String::from("el x y z");
        for a in attributes {
            header.push(' ');
            header.push_str(a.as_ref());
        }
        Self::parse(&header)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter_map(|c| match c {
                Column::Attribute(name) => Some(name.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn header_line(&self) -> String {
        self.columns.iter().map(Column::token).collect::<Vec<_>>().join(" ")
    }
}

fn parse_frame_line(line: &str, line_no: usize) -> Result<(usize, [f64; 3]), ImportError> {
    let bad = |message: &str| ImportError::BadRecord {
        line: line_no,
        message: message.to_string(),
    };
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 5 || tokens[0] != "frame" {
        return Err(bad("expected `frame <natoms> <Lx> <Ly> <Lz>`"));
    }
    let natoms = tokens[1].parse().map_err(|_| bad("bad atom count"))?;
    let mut lengths = [0.0; 3];
    for (axis, tok) in tokens[2..].iter().enumerate() {
        lengths[axis] = tok.parse().map_err(|_| bad("bad box length"))?;
    }
    Ok((natoms, lengths))
}

/// Reads one frame block. `Ok(None)` at a clean end of input.
pub(crate) fn read_block(lines: &mut NumberedLines<'_>, spec: &ColumnSpec) -> Result<Option<Frame>, ImportError> {
    let (line_no, header) = loop {
        match lines.next() {
            None => return Ok(None),
            Some((_, l)) if l.trim().is_empty() => continue,
            Some(entry) => break entry,
        }
    };
    let (natoms, lengths) = parse_frame_line(header, line_no)?;
    let attr_names = spec.attribute_names();
    let mut positions = Vec::with_capacity(natoms);
    let mut types = Vec::with_capacity(natoms);
    let mut attrs: Vec<Vec<f64>> = vec![Vec::with_capacity(natoms); attr_names.len()];
    for _ in 0..natoms {
        let (row_no, row) = lines.next().ok_or(ImportError::Truncated { line: line_no })?;
        let tokens: Vec<&str> = row.split_whitespace().collect();
        if tokens.len() != spec.columns.len() {
            return Err(ImportError::RowArity {
                line: row_no,
                expected: spec.columns.len(),
                actual: tokens.len(),
            });
        }
        let mut pos = [0.0; 3];
        let mut el = "X";
        let mut attr_slot = 0;
        for (col, tok) in spec.columns.iter().zip(&tokens) {
            let num = || {
                tok.parse::<f64>().map_err(|_| ImportError::BadRecord {
                    line: row_no,
                    message: format!("bad number `{tok}` in column `{}`", col.token()),
                })
            };
            match col {
                Column::Element => el = tok,
                Column::X => pos[0] = num()?,
                Column::Y => pos[1] = num()?,
                Column::Z => pos[2] = num()?,
                Column::Attribute(_) => {
                    attrs[attr_slot].push(num()?);
                    attr_slot += 1;
                }
            }
        }
        positions.push(pos);
        types.push(el.to_string());
    }
    let attributes: BTreeMap<String, Vec<f64>> = attr_names.into_iter().zip(attrs).collect();
    let frame = Frame::new(
        positions,
        types,
        vec![0; natoms],
        SimBox::orthorhombic(lengths),
        Vec::new(),
        attributes,
    )?;
    Ok(Some(frame))
}

/// Builds the frame offset index in one streaming pass.
pub fn index<R: BufRead>(reader: R) -> Result<FormatIndex, ImportError> {
    let mut scan = LineScanner::new(reader);
    if !scan.advance()? {
        return Err(ImportError::BadHeader("empty file".into()));
    }
    let spec = ColumnSpec::parse(scan.line())?;
    let mut spans = Vec::new();
    let mut atom_count = None;
    'frames: loop {
        let (start, first_line) = loop {
            if !scan.advance()? {
                break 'frames;
            }
            if !scan.line().trim().is_empty() {
                break (scan.line_start(), scan.line_no());
            }
        };
        let (natoms, _) = parse_frame_line(scan.line(), first_line)?;
        if let Some(n) = atom_count {
            if n != natoms {
                return Err(ImportError::InconsistentAtomCount {
                    frame: spans.len(),
                    expected: n,
                    actual: natoms,
                });
            }
        }
        for _ in 0..natoms {
            if !scan.advance()? {
                log::warn!("ssv: dropping truncated frame starting at line {first_line}");
                break 'frames;
            }
        }
        atom_count.get_or_insert(natoms);
        spans.push(FrameSpan {
            start,
            end: scan.offset(),
            first_line,
        });
    }
    Ok(FormatIndex {
        spans,
        atom_count: atom_count.unwrap_or(0),
        attribute_names: spec.attribute_names(),
        layout: Layout::Ssv(spec),
    })
}

/// Sequential parse of a whole SSV document.
pub fn read_all(text: &str) -> Result<(ColumnSpec, Vec<Frame>), ImportError> {
    let mut lines = numbered_lines(text, 1);
    let (_, header) = lines
        .next()
        .ok_or_else(|| ImportError::BadHeader("empty file".into()))?;
    let spec = ColumnSpec::parse(header)?;
    let mut frames: Vec<Frame> = Vec::new();
    loop {
        match read_block(&mut lines, &spec) {
            Ok(Some(frame)) => {
                if let Some(first) = frames.first() {
                    if first.atom_count() != frame.atom_count() {
                        return Err(ImportError::InconsistentAtomCount {
                            frame: frames.len(),
                            expected: first.atom_count(),
                            actual: frame.atom_count(),
                        });
                    }
                }
                frames.push(frame);
            }
            Ok(None) => break,
            Err(ImportError::Truncated { line }) => {
                log::warn!("ssv: dropping truncated frame starting at line {line}");
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((spec, frames))
}

/// Parses an SSV stream into an in-memory, indexed trajectory.
pub fn parse_ssv<R: Read>(mut reader: R) -> Result<Trajectory, ImportError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    read_all(text)?;
    let index = index(BufReader::new(bytes.as_slice()))?;
    let source = IndexedSource::new(Box::new(MemorySource::new(bytes)), index);
    Ok(Trajectory::new(Box::new(source), "<ssv stream>"))
}

/// Writes frames in canonical SSV form.
///
/// Attribute columns not present on a frame are written as `0`.
pub fn write_ssv<'a, W, I>(mut out: W, spec: &ColumnSpec, frames: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a Frame>,
{
    writeln!(out, "{}", spec.header_line())?;
    for frame in frames {
        let l = frame.sim_box.lengths();
        let edge = |axis: usize| if frame.sim_box.periodic[axis] { l[axis] } else { 0.0 };
        writeln!(out, "frame {} {} {} {}", frame.atom_count(), edge(0), edge(1), edge(2))?;
        let mut row = String::new();
        for i in 0..frame.atom_count() {
            row.clear();
            for (c, col) in spec.columns.iter().enumerate() {
                if c > 0 {
                    row.push(' ');
                }
                let value = match col {
                    Column::Element => {
                        row.push_str(&frame.atom_types[i]);
                        continue;
                    }
                    Column::X => frame.positions[i][0],
                    Column::Y => frame.positions[i][1],
                    Column::Z => frame.positions[i][2],
                    Column::Attribute(name) => frame.attributes.get(name).map_or(0.0, |v| v[i]),
                };
                row.push_str(&value.to_string());
            }
            writeln!(out, "{row}")?;
        }
    }
    Ok(())
}
