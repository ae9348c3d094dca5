//! Byte sources and the line-indexed frame source shared by the text importers.

use std::fs::File;
use std::io::{self, BufRead, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::{gro, lammps, pdb, ssv, ImportError};
use crate::model::{Frame, FrameSource};

/// Random-access byte stream backing a trajectory.
pub trait ByteSource: Send + Sync {
    fn len(&self) -> u64;
    fn read_range(&self, start: u64, end: u64) -> io::Result<Vec<u8>>;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone)]
pub struct MemorySource(Arc<Vec<u8>>);

impl MemorySource {
    pub fn new(bytes: Vec<u8>) -> Self {
        Self(Arc::new(bytes))
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }
}

impl ByteSource for MemorySource {
    fn len(&self) -> u64 {
        self.0.len() as u64
    }

    fn read_range(&self, start: u64, end: u64) -> io::Result<Vec<u8>> {
        let (s, e) = (start as usize, end as usize);
        self.0
            .get(s..e)
            .map(<[u8]>::to_vec)
            .ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "range past end of buffer"))
    }
}

pub struct FileSource {
    path: PathBuf,
    len: u64,
    file: Mutex<File>,
}

impl FileSource {
    pub fn open(path: &Path) -> io::Result<Self> {
        let file = File::open(path)?;
        let len = file.metadata()?.len();
        Ok(Self {
            path: path.to_path_buf(),
            len,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl ByteSource for FileSource {
    fn len(&self) -> u64 {
        self.len
    }

    fn read_range(&self, start: u64, end: u64) -> io::Result<Vec<u8>> {
        let mut file = self.file.lock().expect("file handle poisoned");
        file.seek(SeekFrom::Start(start))?;
        let mut buf = vec![0u8; (end - start) as usize];
        file.read_exact(&mut buf)?;
        Ok(buf)
    }
}

/// Byte range and first line number (1-based) of one frame block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpan {
    pub start: u64,
    pub end: u64,
    pub first_line: usize,
}

/// Result of an indexing pass over a text trajectory.
#[derive(Debug, Clone)]
pub struct FormatIndex {
    pub spans: Vec<FrameSpan>,
    pub atom_count: usize,
    pub attribute_names: Vec<String>,
    pub layout: Layout,
}

/// Format-specific metadata gathered while indexing.
#[derive(Debug, Clone)]
pub enum Layout {
    Ssv(ssv::ColumnSpec),
    Gro,
    Pdb(pdb::PdbGlobals),
    Lammps,
}

impl Layout {
    pub fn format_name(&self) -> &'static str {
        match self {
            Layout::Ssv(_) => "ssv",
            Layout::Gro => "gro",
            Layout::Pdb(_) => "pdb",
            Layout::Lammps => "lammps",
        }
    }
}

/// Frame source that parses one indexed block per `read_frame` call.
pub struct IndexedSource {
    bytes: Box<dyn ByteSource>,
    index: FormatIndex,
}

impl IndexedSource {
    pub fn new(bytes: Box<dyn ByteSource>, index: FormatIndex) -> Self {
        Self { bytes, index }
    }

    pub fn index(&self) -> &FormatIndex {
        &self.index
    }
}

impl FrameSource for IndexedSource {
    fn format_name(&self) -> &str {
        self.index.layout.format_name()
    }

    fn frame_count(&self) -> usize {
        self.index.spans.len()
    }

    fn atom_count(&self) -> usize {
        self.index.atom_count
    }

    fn attribute_names(&self) -> Vec<String> {
        self.index.attribute_names.clone()
    }

    fn read_frame(&self, k: usize) -> Result<Frame, ImportError> {
        let span = self.index.spans[k];
        let raw = self.bytes.read_range(span.start, span.end)?;
        let text = String::from_utf8(raw)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        let mut lines = numbered_lines(&text, span.first_line);
        let frame = match &self.index.layout {
            Layout::Ssv(spec) => ssv::read_block(&mut lines, spec)?,
            Layout::Gro => gro::read_block(&mut lines)?,
            Layout::Pdb(globals) => Some(pdb::read_block(&mut lines, globals, k)?),
            Layout::Lammps => lammps::read_block(&mut lines)?,
        };
        frame.ok_or(ImportError::Truncated {
            line: span.first_line,
        })
    }
}

/// Iterator over `(line number, line)` pairs with line endings stripped.
pub type NumberedLines<'a> = std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>;

pub fn numbered_lines(text: &str, first_line: usize) -> NumberedLines<'_> {
    let it: Box<dyn Iterator<Item = (usize, &str)>> = Box::new(
        text.lines()
            .enumerate()
            .map(move |(i, l)| (first_line + i, l.strip_suffix('\r').unwrap_or(l))),
    );
    it.peekable()
}

/// Streaming line reader that tracks byte offsets for the indexing pass.
pub struct LineScanner<R> {
    reader: R,
    offset: u64,
    line_start: u64,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> LineScanner<R> {
    pub fn new(reader: R) -> Self {
        Self {
            reader,
            offset: 0,
            line_start: 0,
            line_no: 0,
            buf: String::new(),
        }
    }

    /// Advances to the next line; `false` at end of stream.
    pub fn advance(&mut self) -> io::Result<bool> {
        self.buf.clear();
        let n = self.reader.read_line(&mut self.buf)?;
        if n == 0 {
            return Ok(false);
        }
        self.line_start = self.offset;
        self.offset += n as u64;
        self.line_no += 1;
        Ok(true)
    }

    pub fn line(&self) -> &str {
        self.buf.trim_end_matches(['\n', '\r'])
    }

    /// Byte offset where the current line starts.
    pub fn line_start(&self) -> u64 {
        self.line_start
    }

    /// Byte offset just past the current line.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn line_no(&self) -> usize {
        self.line_no
    }
}
