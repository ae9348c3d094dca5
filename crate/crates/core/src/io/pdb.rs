//! Protein Data Bank files.
//!
//! `MODEL`/`ENDMDL` (or `END`) delimit frames; a file without `MODEL`
//! records is a single frame. `CRYST1` sets the cell for the frames that
//! follow it and `CONECT` records populate bonds for every frame.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read};

use super::source::{numbered_lines, FormatIndex, FrameSpan, IndexedSource, Layout, LineScanner, MemorySource, NumberedLines};
use super::ImportError;
use crate::model::{Frame, SimBox, Trajectory};

/// File-level records shared by all frames.
#[derive(Debug, Clone, Default)]
pub struct PdbGlobals {
    /// Bonded atom serial-number pairs from `CONECT`.
    pub conect: Vec<(i64, i64)>,
    /// `CRYST1` in effect at the start of each frame.
    pub cells: Vec<Option<SimBox>>,
}

fn bad(line: usize, message: impl Into<String>) -> ImportError {
    ImportError::BadRecord {
        line,
        message: message.into(),
    }
}

fn record(line: &str) -> &str {
    line.get(..6).unwrap_or(line).trim_end()
}

fn col(line: &str, range: std::ops::Range<usize>) -> &str {
    let end = range.end.min(line.len());
    line.get(range.start.min(end)..end).unwrap_or("").trim()
}

fn num(line: &str, range: std::ops::Range<usize>, line_no: usize, what: &str) -> Result<f64, ImportError> {
    let raw = col(line, range);
    raw.parse()
        .map_err(|_| bad(line_no, format!("bad {what} `{raw}`")))
}

pub(crate) fn parse_cryst1(line: &str, line_no: usize) -> Result<SimBox, ImportError> {
    let a = num(line, 6..15, line_no, "cell length a")?;
    let b = num(line, 15..24, line_no, "cell length b")?;
    let c = num(line, 24..33, line_no, "cell length c")?;
    let alpha = num(line, 33..40, line_no, "cell angle alpha")?;
    let beta = num(line, 40..47, line_no, "cell angle beta")?;
    let gamma = num(line, 47..54, line_no, "cell angle gamma")?;
    if alpha == 90.0 && beta == 90.0 && gamma == 90.0 {
        return Ok(SimBox::orthorhombic([a, b, c]));
    }
    let (ca, cb, cg) = (alpha.to_radians().cos(), beta.to_radians().cos(), gamma.to_radians().cos());
    let sg = gamma.to_radians().sin();
    let cx = c * cb;
    let cy = c * (ca - cb * cg) / sg;
    let cz = (c * c - cx * cx - cy * cy).max(0.0).sqrt();
    Ok(SimBox {
        matrix: [[a, 0.0, 0.0], [b * cg, b * sg, 0.0], [cx, cy, cz]],
        periodic: [a > 0.0, b > 0.0, c > 0.0],
    })
}

fn parse_conect(line: &str, line_no: usize, out: &mut Vec<(i64, i64)>) -> Result<(), ImportError> {
    let serials: Vec<i64> = line
        .get(6..)
        .unwrap_or("")
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| bad(line_no, "bad CONECT serial"))?;
    if let Some((&from, rest)) = serials.split_first() {
        out.extend(rest.iter().map(|&to| (from, to)));
    }
    Ok(())
}

struct AtomRecord {
    serial: Option<i64>,
    name: String,
    resid: i64,
    pos: [f64; 3],
}

fn parse_atom(line: &str, line_no: usize) -> Result<AtomRecord, ImportError> {
    if line.len() < 54 {
        return Err(bad(line_no, "ATOM record too short for coordinates"));
    }
    let element = col(line, 76..78);
    let name = if element.is_empty() { col(line, 12..16) } else { element };
    let resid_raw = col(line, 22..26);
    let resid = if resid_raw.is_empty() {
        0
    } else {
        resid_raw
            .parse()
            .map_err(|_| bad(line_no, format!("bad residue number `{resid_raw}`")))?
    };
    Ok(AtomRecord {
        serial: col(line, 6..11).parse().ok(),
        name: name.to_string(),
        resid,
        pos: [
            num(line, 30..38, line_no, "x coordinate")?,
            num(line, 38..46, line_no, "y coordinate")?,
            num(line, 46..54, line_no, "z coordinate")?,
        ],
    })
}

fn build_frame(
    atoms: Vec<AtomRecord>,
    cell: Option<SimBox>,
    conect: &[(i64, i64)],
    line_no: usize,
) -> Result<Frame, ImportError> {
    let by_serial: HashMap<i64, usize> = atoms
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.serial.map(|s| (s, i)))
        .collect();
    let lookup = |s: i64| {
        by_serial
            .get(&s)
            .copied()
            .ok_or_else(|| bad(line_no, format!("CONECT references unknown atom serial {s}")))
    };
    let mut bonds = Vec::with_capacity(conect.len());
    for &(a, b) in conect {
        let (i, j) = (lookup(a)?, lookup(b)?);
        if i != j {
            bonds.push((i, j));
        }
    }
    let n = atoms.len();
    let mut positions = Vec::with_capacity(n);
    let mut names = Vec::with_capacity(n);
    let mut resids = Vec::with_capacity(n);
    for a in atoms {
        positions.push(a.pos);
        names.push(a.name);
        resids.push(a.resid);
    }
    Ok(Frame::new(
        positions,
        names,
        resids,
        cell.unwrap_or_else(SimBox::open),
        bonds,
        BTreeMap::new(),
    )?)
}

/// Reads the atoms of one indexed frame block.
pub(crate) fn read_block(lines: &mut NumberedLines<'_>, globals: &PdbGlobals, k: usize) -> Result<Frame, ImportError> {
    let mut cell = globals.cells.get(k).cloned().flatten();
    let mut atoms = Vec::new();
    let mut first = 0;
    for (no, line) in lines {
        if first == 0 {
            first = no;
        }
        match record(line) {
            "ATOM" | "HETATM" => atoms.push(parse_atom(line, no)?),
            "CRYST1" => cell = Some(parse_cryst1(line, no)?),
            _ => {}
        }
    }
    build_frame(atoms, cell, &globals.conect, first)
}

fn close_frame(
    f: OpenFrame,
    end: u64,
    atom_count: &mut Option<usize>,
    spans: &mut Vec<FrameSpan>,
    cells: &mut Vec<Option<SimBox>>,
) -> Result<(), ImportError> {
    if let Some(n) = *atom_count {
        if n != f.atoms {
            return Err(ImportError::InconsistentAtomCount {
                frame: spans.len(),
                expected: n,
                actual: f.atoms,
            });
        }
    }
    atom_count.get_or_insert(f.atoms);
    spans.push(FrameSpan {
        start: f.start,
        end,
        first_line: f.first_line,
    });
    cells.push(f.cell);
    Ok(())
}

struct OpenFrame {
    start: u64,
    first_line: usize,
    atoms: usize,
    from_model: bool,
    cell: Option<SimBox>,
}

pub fn index<R: BufRead>(reader: R) -> Result<FormatIndex, ImportError> {
    let mut scan = LineScanner::new(reader);
    let mut spans = Vec::new();
    let mut globals = PdbGlobals::default();
    let mut cell: Option<SimBox> = None;
    let mut open: Option<OpenFrame> = None;
    let mut atom_count: Option<usize> = None;

    while scan.advance()? {
        let line = scan.line();
        let no = scan.line_no();
        match record(line) {
            "MODEL" => {
                if let Some(f) = open.take() {
                    close_frame(f, scan.line_start(), &mut atom_count, &mut spans, &mut globals.cells)?;
                }
                open = Some(OpenFrame {
                    start: scan.line_start(),
                    first_line: no,
                    atoms: 0,
                    from_model: true,
                    cell: cell.clone(),
                });
            }
            "ATOM" | "HETATM" => {
                let f = open.get_or_insert_with(|| OpenFrame {
                    start: scan.line_start(),
                    first_line: no,
                    atoms: 0,
                    from_model: false,
                    cell: cell.clone(),
                });
                if line.len() < 54 {
                    return Err(bad(no, "ATOM record too short for coordinates"));
                }
                f.atoms += 1;
            }
            "CRYST1" => {
                let c = parse_cryst1(line, no)?;
                if open.is_none() {
                    cell = Some(c);
                }
            }
            "ENDMDL" | "END" => {
                if let Some(f) = open.take() {
                    close_frame(f, scan.offset(), &mut atom_count, &mut spans, &mut globals.cells)?;
                }
            }
            "CONECT" => parse_conect(line, no, &mut globals.conect)?,
            _ => {}
        }
    }
    if let Some(f) = open.take() {
        let complete = !f.from_model || atom_count.map_or(true, |n| n == f.atoms);
        if complete {
            close_frame(f, scan.offset(), &mut atom_count, &mut spans, &mut globals.cells)?;
        } else {
            log::warn!("pdb: dropping truncated model starting at line {}", f.first_line);
        }
    }
    Ok(FormatIndex {
        spans,
        atom_count: atom_count.unwrap_or(0),
        attribute_names: Vec::new(),
        layout: Layout::Pdb(globals),
    })
}

/// Sequential parse of a whole PDB document.
pub fn read_all(text: &str) -> Result<Vec<Frame>, ImportError> {
    let mut conect = Vec::new();
    for (no, line) in numbered_lines(text, 1) {
        if record(line) == "CONECT" {
            parse_conect(line, no, &mut conect)?;
        }
    }
    let mut frames: Vec<Frame> = Vec::new();
    let mut cell: Option<SimBox> = None;
    let mut current: Option<(Vec<AtomRecord>, Option<SimBox>, usize, bool)> = None;
    let finish = |frames: &mut Vec<Frame>, atoms: Vec<AtomRecord>, c: Option<SimBox>, no: usize| -> Result<(), ImportError> {
        let frame = build_frame(atoms, c, &conect, no)?;
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
        Ok(())
    };
    for (no, line) in numbered_lines(text, 1) {
        match record(line) {
            "MODEL" => {
                if let Some((atoms, c, start, _)) = current.take() {
                    finish(&mut frames, atoms, c, start)?;
                }
                current = Some((Vec::new(), cell.clone(), no, true));
            }
            "ATOM" | "HETATM" => {
                let entry = current.get_or_insert_with(|| (Vec::new(), cell.clone(), no, false));
                entry.0.push(parse_atom(line, no)?);
            }
            "CRYST1" => {
                let c = parse_cryst1(line, no)?;
                match current.as_mut() {
                    Some(entry) => entry.1 = Some(c),
                    None => cell = Some(c),
                }
            }
            "ENDMDL" | "END" => {
                if let Some((atoms, c, start, _)) = current.take() {
                    finish(&mut frames, atoms, c, start)?;
                }
            }
            _ => {}
        }
    }
    if let Some((atoms, c, start, from_model)) = current.take() {
        let complete = !from_model || frames.first().map_or(true, |f| f.atom_count() == atoms.len());
        if complete {
            finish(&mut frames, atoms, c, start)?;
        } else {
            log::warn!("pdb: dropping truncated model starting at line {start}");
        }
    }
    Ok(frames)
}

pub fn parse_pdb<R: Read>(mut reader: R) -> Result<Trajectory, ImportError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    read_all(text)?;
    let index = index(BufReader::new(bytes.as_slice()))?;
    let source = IndexedSource::new(Box::new(MemorySource::new(bytes)), index);
    Ok(Trajectory::new(Box::new(source), "<pdb stream>"))
}
