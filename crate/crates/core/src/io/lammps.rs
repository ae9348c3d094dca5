//! LAMMPS text dump files (`dump atom` / `dump custom`).
//!
//! Atoms are re-ordered by `id`. Scaled coordinates (`xs ys zs`) are
//! converted with the box bounds; columns other than `id`, `type`,
//! `element`, `mol` and the coordinates become attributes.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};

use super::source::{numbered_lines, FormatIndex, FrameSpan, IndexedSource, Layout, LineScanner, MemorySource, NumberedLines};
use super::ImportError;
use crate::model::{Frame, SimBox, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
enum CoordKind {
    Absolute,
    Scaled,
}

#[derive(Debug, Clone)]
struct AtomsHeader {
    columns: Vec<String>,
    id: usize,
    atom_type: Option<usize>,
    element: Option<usize>,
    mol: Option<usize>,
    coords: [usize; 3],
    kind: CoordKind,
    attributes: Vec<(String, usize)>,
}

fn item_error(line: usize, message: impl Into<String>) -> ImportError {
    ImportError::BadItemHeader {
        line,
        message: message.into(),
    }
}

fn bad(line: usize, message: impl Into<String>) -> ImportError {
    ImportError::BadRecord {
        line,
        message: message.into(),
    }
}

fn parse_atoms_header(line: &str, line_no: usize) -> Result<AtomsHeader, ImportError> {
    let rest = line
        .strip_prefix("ITEM: ATOMS")
        .ok_or_else(|| item_error(line_no, "expected `ITEM: ATOMS`"))?;
    let columns: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
    let find = |name: &str| columns.iter().position(|c| c == name);
    let id = find("id").ok_or_else(|| ImportError::MissingColumn("id".into()))?;
    let (coords, kind) = if let (Some(x), Some(y), Some(z)) = (find("x"), find("y"), find("z")) {
        ([x, y, z], CoordKind::Absolute)
    } else if let (Some(x), Some(y), Some(z)) = (find("xu"), find("yu"), find("zu")) {
        ([x, y, z], CoordKind::Absolute)
    } else if let (Some(x), Some(y), Some(z)) = (find("xs"), find("ys"), find("zs")) {
        ([x, y, z], CoordKind::Scaled)
    } else {
        return Err(ImportError::MissingColumn("x y z or xs ys zs".into()));
    };
    let atom_type = find("type");
    let element = find("element");
    let mol = find("mol");
    let consumed = |i: usize| i == id || coords.contains(&i) || Some(i) == atom_type || Some(i) == element || Some(i) == mol;
    let attributes = columns
        .iter()
        .enumerate()
        .filter(|(i, _)| !consumed(*i))
        .map(|(i, c)| (c.clone(), i))
        .collect();
    Ok(AtomsHeader {
        columns,
        id,
        atom_type,
        element,
        mol,
        coords,
        kind,
        attributes,
    })
}

/// Box origin and vectors from `BOX BOUNDS` lines (orthogonal or tilted).
fn parse_bounds(
    header: &str,
    rows: &[(usize, &str)],
) -> Result<([f64; 3], SimBox), ImportError> {
    let flags: Vec<&str> = header.split_whitespace().skip(3).collect();
    let tilted = flags.first() == Some(&"xy");
    let pbc_flags: Vec<&str> = flags.iter().copied().filter(|f| !matches!(*f, "xy" | "xz" | "yz")).collect();
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    let mut tilt = [0.0; 3];
    for (axis, (no, row)) in rows.iter().enumerate() {
        let vals: Vec<f64> = row
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad(*no, "bad box bounds"))?;
        let want = if tilted { 3 } else { 2 };
        if vals.len() < want {
            return Err(bad(*no, format!("box bounds need {want} values")));
        }
        lo[axis] = vals[0];
        hi[axis] = vals[1];
        if tilted {
            tilt[axis] = vals[2];
        }
    }
    let [xy, xz, yz] = tilt;
    if tilted {
        lo[0] -= 0.0f64.min(xy).min(xz).min(xy + xz);
        hi[0] -= 0.0f64.max(xy).max(xz).max(xy + xz);
        lo[1] -= 0.0f64.min(yz);
        hi[1] -= 0.0f64.max(yz);
    }
    let periodic = [0, 1, 2].map(|axis| pbc_flags.get(axis).map_or(true, |f| *f == "pp"));
    let sim_box = SimBox {
        matrix: [
            [hi[0] - lo[0], 0.0, 0.0],
            [xy, hi[1] - lo[1], 0.0],
            [xz, yz, hi[2] - lo[2]],
        ],
        periodic,
    };
    Ok((lo, sim_box))
}

fn expect_item<'a>(lines: &mut NumberedLines<'a>, item: &str, start: usize) -> Result<(usize, &'a str), ImportError> {
    let (no, line) = lines.next().ok_or(ImportError::Truncated { line: start })?;
    if !line.starts_with(item) {
        return Err(item_error(no, format!("expected `{item}`")));
    }
    Ok((no, line))
}

fn value_line<'a>(lines: &mut NumberedLines<'a>, start: usize) -> Result<(usize, &'a str), ImportError> {
    lines.next().ok_or(ImportError::Truncated { line: start })
}

pub(crate) fn read_block(lines: &mut NumberedLines<'_>) -> Result<Option<Frame>, ImportError> {
    let start = loop {
        match lines.peek() {
            None => return Ok(None),
            Some((_, l)) if l.trim().is_empty() => {
                lines.next();
            }
            Some((no, _)) => break *no,
        }
    };
    expect_item(lines, "ITEM: TIMESTEP", start)?;
    value_line(lines, start)?;
    expect_item(lines, "ITEM: NUMBER OF ATOMS", start)?;
    let (no, n_line) = value_line(lines, start)?;
    let natoms: usize = n_line.trim().parse().map_err(|_| bad(no, "bad atom count"))?;
    let (_, bounds_header) = expect_item(lines, "ITEM: BOX BOUNDS", start)?;
    let bounds_header = bounds_header.to_string();
    let mut bound_rows = Vec::with_capacity(3);
    for _ in 0..3 {
        bound_rows.push(value_line(lines, start)?);
    }
    let (origin, sim_box) = parse_bounds(&bounds_header, &bound_rows)?;
    let (atoms_no, atoms_line) = value_line(lines, start)?;
    let header = parse_atoms_header(atoms_line, atoms_no)?;

    let mut rows: Vec<(i64, String, i64, [f64; 3], Vec<f64>)> = Vec::with_capacity(natoms);
    for _ in 0..natoms {
        let (no, row) = value_line(lines, start)?;
        let tokens: Vec<&str> = row.split_whitespace().collect();
        if tokens.len() != header.columns.len() {
            return Err(ImportError::RowArity {
                line: no,
                expected: header.columns.len(),
                actual: tokens.len(),
            });
        }
        let float = |i: usize| {
            tokens[i]
                .parse::<f64>()
                .map_err(|_| bad(no, format!("bad value `{}` in column `{}`", tokens[i], header.columns[i])))
        };
        let int = |i: usize| {
            tokens[i]
                .parse::<i64>()
                .map_err(|_| bad(no, format!("bad integer `{}` in column `{}`", tokens[i], header.columns[i])))
        };
        let id = int(header.id)?;
        let label = header
            .element
            .or(header.atom_type)
            .map_or_else(|| "X".to_string(), |i| tokens[i].to_string());
        let mol = header.mol.map(int).transpose()?.unwrap_or(0);
        let raw = [float(header.coords[0])?, float(header.coords[1])?, float(header.coords[2])?];
        let pos = match header.kind {
            CoordKind::Absolute => raw,
            CoordKind::Scaled => {
                let m = &sim_box.matrix;
                let mut p = origin;
                for (s, row) in raw.iter().zip(m.iter()) {
                    for axis in 0..3 {
                        p[axis] += s * row[axis];
                    }
                }
                p
            }
        };
        let attrs = header
            .attributes
            .iter()
            .map(|(_, i)| float(*i))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((id, label, mol, pos, attrs));
    }
    rows.sort_by_key(|r| r.0);
    if rows.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(bad(atoms_no, "duplicate atom id"));
    }

    let mut positions = Vec::with_capacity(natoms);
    let mut types = Vec::with_capacity(natoms);
    let mut mols = Vec::with_capacity(natoms);
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(natoms); header.attributes.len()];
    for (_, label, mol, pos, attrs) in rows {
        positions.push(pos);
        types.push(label);
        mols.push(mol);
        for (c, v) in columns.iter_mut().zip(attrs) {
            c.push(v);
        }
    }
    let attributes: BTreeMap<String, Vec<f64>> = header
        .attributes
        .iter()
        .map(|(name, _)| name.clone())
        .zip(columns)
        .collect();
    Ok(Some(Frame::new(positions, types, mols, sim_box, Vec::new(), attributes)?))
}

pub fn index<R: BufRead>(reader: R) -> Result<FormatIndex, ImportError> {
    let mut scan = LineScanner::new(reader);
    let mut spans = Vec::new();
    let mut atom_count = None;
    let mut attribute_names = Vec::new();
    'frames: loop {
        let (start, first_line) = loop {
            if !scan.advance()? {
                break 'frames;
            }
            if !scan.line().trim().is_empty() {
                break (scan.line_start(), scan.line_no());
            }
        };
        if !scan.line().starts_with("ITEM: TIMESTEP") {
            return Err(item_error(first_line, "expected `ITEM: TIMESTEP`"));
        }
        let mut natoms = None;
        loop {
            if !scan.advance()? {
                log::warn!("lammps: dropping truncated frame starting at line {first_line}");
                break 'frames;
            }
            let line = scan.line();
            if line.starts_with("ITEM: NUMBER OF ATOMS") {
                if !scan.advance()? {
                    log::warn!("lammps: dropping truncated frame starting at line {first_line}");
                    break 'frames;
                }
                natoms = Some(
                    scan.line()
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| bad(scan.line_no(), "bad atom count"))?,
                );
            } else if line.starts_with("ITEM: ATOMS") {
                let header = parse_atoms_header(line, scan.line_no())?;
                if spans.is_empty() {
                    attribute_names = header.attributes.iter().map(|(n, _)| n.clone()).collect();
                }
                break;
            }
        }
        let natoms = natoms.ok_or_else(|| item_error(first_line, "missing `ITEM: NUMBER OF ATOMS`"))?;
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
                log::warn!("lammps: dropping truncated frame starting at line {first_line}");
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
        attribute_names,
        layout: Layout::Lammps,
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
                log::warn!("lammps: dropping truncated frame starting at line {line}");
                return Ok(frames);
            }
            Err(e) => return Err(e),
        }
    }
}

pub fn parse_lammps_dump<R: Read>(mut reader: R) -> Result<Trajectory, ImportError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    read_all(text)?;
    let index = index(BufReader::new(bytes.as_slice()))?;
    let source = IndexedSource::new(Box::new(MemorySource::new(bytes)), index);
    Ok(Trajectory::new(Box::new(source), "<lammps stream>"))
}
