//! GROMACS `.gro` configurations (single or multi-frame).
//!
//! Coordinates and box vectors are stored in nm and converted to Å.
//! Velocities are ignored.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};

use super::source::{numbered_lines, FormatIndex, FrameSpan, IndexedSource, Layout, LineScanner, MemorySource, NumberedLines};
use super::ImportError;
use crate::model::{Frame, SimBox, Trajectory};

const NM_TO_ANGSTROM: f64 = 10.0;
const COORD_START: usize = 20;

fn bad(line: usize, message: impl Into<String>) -> ImportError {
    ImportError::BadRecord {
        line,
        message: message.into(),
    }
}

fn field(line: &str, range: std::ops::Range<usize>, line_no: usize, what: &str) -> Result<String, ImportError> {
    line.get(range)
        .map(|s| s.trim().to_string())
        .ok_or_else(|| bad(line_no, format!("atom record too short for {what}")))
}

/// Width of coordinate fields; `%8.3f` normally, wider for high-precision files.
fn coordinate_width(line: &str) -> usize {
    let tail = match line.get(COORD_START..) {
        Some(t) => t,
        None => return 8,
    };
    let mut dots = tail.match_indices('.').map(|(i, _)| i);
    match (dots.next(), dots.next()) {
        (Some(a), Some(b)) if b > a => b - a,
        _ => 8,
    }
}

fn parse_atom(line: &str, line_no: usize, width: usize) -> Result<(i64, String, [f64; 3]), ImportError> {
    if !line.is_ascii() {
        return Err(bad(line_no, "non-ASCII atom record"));
    }
    let resnr = field(line, 0..5, line_no, "residue number")?;
    let resid = resnr
        .parse::<i64>()
        .map_err(|_| bad(line_no, format!("bad residue number `{resnr}`")))?;
    let name = field(line, 10..15, line_no, "atom name")?;
    let mut pos = [0.0; 3];
    for (axis, p) in pos.iter_mut().enumerate() {
        let start = COORD_START + axis * width;
        let raw = field(line, start..start + width, line_no, "coordinates")?;
        *p = raw
            .parse::<f64>()
            .map_err(|_| bad(line_no, format!("bad coordinate `{raw}`")))?
            * NM_TO_ANGSTROM;
    }
    Ok((resid, name, pos))
}

fn parse_box(line: &str, line_no: usize) -> Result<SimBox, ImportError> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map(|v| v * NM_TO_ANGSTROM))
        .collect::<Result<_, _>>()
        .map_err(|_| bad(line_no, "bad box line"))?;
    let m = match values.len() {
        3 => [[values[0], 0.0, 0.0], [0.0, values[1], 0.0], [0.0, 0.0, values[2]]],
        9 => [
            [values[0], values[3], values[4]],
            [values[5], values[1], values[6]],
            [values[7], values[8], values[2]],
        ],
        n => return Err(bad(line_no, format!("box line has {n} values, expected 3 or 9"))),
    };
    let periodic = [m[0][0] > 0.0, m[1][1] > 0.0, m[2][2] > 0.0];
    Ok(SimBox { matrix: m, periodic })
}

pub(crate) fn read_block(lines: &mut NumberedLines<'_>) -> Result<Option<Frame>, ImportError> {
    let (title_no, _) = match lines.next() {
        None => return Ok(None),
        Some(entry) => entry,
    };
    let (count_no, count_line) = lines.next().ok_or(ImportError::Truncated { line: title_no })?;
    let natoms: usize = count_line
        .trim()
        .parse()
        .map_err(|_| bad(count_no, "bad atom count"))?;
    let mut positions = Vec::with_capacity(natoms);
    let mut names = Vec::with_capacity(natoms);
    let mut resids = Vec::with_capacity(natoms);
    let mut width = 8;
    for i in 0..natoms {
        let (no, line) = lines.next().ok_or(ImportError::Truncated { line: title_no })?;
        if i == 0 {
            width = coordinate_width(line);
        }
        let (resid, name, pos) = parse_atom(line, no, width)?;
        positions.push(pos);
        names.push(name);
        resids.push(resid);
    }
    let (box_no, box_line) = lines.next().ok_or(ImportError::Truncated { line: title_no })?;
    let sim_box = parse_box(box_line, box_no)?;
    Ok(Some(Frame::new(positions, names, resids, sim_box, Vec::new(), BTreeMap::new())?))
}

pub fn index<R: BufRead>(reader: R) -> Result<FormatIndex, ImportError> {
    let mut scan = LineScanner::new(reader);
    let mut spans = Vec::new();
    let mut atom_count = None;
    'frames: while scan.advance()? {
        let (start, first_line) = (scan.line_start(), scan.line_no());
        if !scan.advance()? {
            log::warn!("gro: dropping truncated frame starting at line {first_line}");
            break;
        }
        let natoms: usize = scan
            .line()
            .trim()
            .parse()
            .map_err(|_| bad(scan.line_no(), "bad atom count"))?;
        if let Some(n) = atom_count {
            if n != natoms {
                return Err(ImportError::InconsistentAtomCount {
                    frame: spans.len(),
                    expected: n,
                    actual: natoms,
                });
            }
        }
        let mut width = 8;
        for i in 0..natoms {
            if !scan.advance()? {
                log::warn!("gro: dropping truncated frame starting at line {first_line}");
                break 'frames;
            }
            if i == 0 {
                width = coordinate_width(scan.line());
            }
            // shape check only; full parsing happens on load
            if scan.line().len() < COORD_START + 3 * width {
                return Err(bad(scan.line_no(), "atom record too short for coordinates"));
            }
        }
        if !scan.advance()? {
            log::warn!("gro: dropping truncated frame starting at line {first_line}");
            break;
        }
        parse_box(scan.line(), scan.line_no())?;
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
        attribute_names: Vec::new(),
        layout: Layout::Gro,
    })
}

pub fn read_all(text: &str) -> Result<Vec<Frame>, ImportError> {
    let mut lines = numbered_lines(text, 1);
    let mut frames: Vec<Frame> = Vec::new();
    loop {
        match read_block(&mut lines) {
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
            Ok(None) => return Ok(frames),
            Err(ImportError::Truncated { line }) => {
                log::warn!("gro: dropping truncated frame starting at line {line}");
                return Ok(frames);
            }
            Err(e) => return Err(e),
        }
    }
}

pub fn parse_gro<R: Read>(mut reader: R) -> Result<Trajectory, ImportError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    read_all(text)?;
    let index = index(BufReader::new(bytes.as_slice()))?;
    let source = IndexedSource::new(Box::new(MemorySource::new(bytes)), index);
    Ok(Trajectory::new(Box::new(source), "<gro stream>"))
}
