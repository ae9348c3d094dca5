use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use super::Frame;
use crate::io::ImportError;

/// Default frame cache budget: 512 MiB.
pub const DEFAULT_CACHE_BUDGET: usize = 512 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("frame {index} out of range (trajectory has {count} frames)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error(transparent)]
    Source(#[from] ImportError),
}

/// Random-access provider of frames. Implementations must be pure: reading
/// the same frame twice yields identical data.
pub trait FrameSource: Send + Sync {
    fn format_name(&self) -> &str;
    fn frame_count(&self) -> usize;
    fn atom_count(&self) -> usize;
    /// Per-atom attribute columns supplied with every frame.
    fn attribute_names(&self) -> Vec<String>;
    fn read_frame(&self, index: usize) -> Result<Frame, ImportError>;
}

struct CacheEntry {
    frame: Arc<Frame>,
    bytes: usize,
    last_used: u64,
}

/// LRU frame cache bounded by an approximate byte budget.
struct FrameCache {
    budget: usize,
    used: usize,
    tick: u64,
    entries: HashMap<usize, CacheEntry>,
}

impl FrameCache {
    fn new(budget: usize) -> Self {
        Self {
            budget,
            used: 0,
            tick: 0,
            entries: HashMap::new(),
        }
    }

    fn get(&mut self, index: usize) -> Option<Arc<Frame>> {
        self.tick += 1;
        let tick = self.tick;
        self.entries.get_mut(&index).map(|e| {
            e.last_used = tick;
            Arc::clone(&e.frame)
        })
    }

    fn insert(&mut self, index: usize, frame: Arc<Frame>) {
        let bytes = frame.approx_bytes();
        self.tick += 1;
        if let Some(old) = self.entries.insert(
            index,
            CacheEntry {
                frame,
                bytes,
                last_used: self.tick,
            },
        ) {
            self.used -= old.bytes;
        }
        self.used += bytes;
        while self.used > self.budget && self.entries.len() > 1 {
            let victim = self
                .entries
                .iter()
                .filter(|(k, _)| **k != index)
                .min_by_key(|(_, e)| e.last_used)
                .map(|(k, _)| *k);
            match victim {
                Some(k) => {
                    let e = self.entries.remove(&k).expect("victim present");
                    self.used -= e.bytes;
                }
                None => break,
            }
        }
    }
}

/// A lazily loaded sequence of frames with constant atom count.
pub struct Trajectory {
    source: Box<dyn FrameSource>,
    label: String,
    cache: Mutex<FrameCache>,
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("label", &self.label)
            .field("format", &self.source.format_name())
            .field("frames", &self.frame_count())
            .field("atoms", &self.atom_count())
            .finish()
    }
}

impl Trajectory {
    pub fn new(source: Box<dyn FrameSource>, label: impl Into<String>) -> Self {
        Self::with_cache_budget(source, label, DEFAULT_CACHE_BUDGET)
    }

    pub fn with_cache_budget(
        source: Box<dyn FrameSource>,
        label: impl Into<String>,
        budget_bytes: usize,
    ) -> Self {
        Self {
            source,
            label: label.into(),
            cache: Mutex::new(FrameCache::new(budget_bytes)),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn format_name(&self) -> &str {
        self.source.format_name()
    }

    pub fn frame_count(&self) -> usize {
        self.source.frame_count()
    }

    pub fn atom_count(&self) -> usize {
        self.source.atom_count()
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.source.attribute_names()
    }

    /// Stable description of the data source, used in cache keys.
    pub fn identity(&self) -> String {
        format!(
            "{}|{}|{}x{}",
            self.source.format_name(),
            self.label,
            self.frame_count(),
            self.atom_count()
        )
    }

    pub fn load_frame(&self, index: usize) -> Result<Arc<Frame>, TrajectoryError> {
        let count = self.frame_count();
        if index >= count {
            return Err(TrajectoryError::IndexOutOfRange { index, count });
        }
        let mut cache = self.cache.lock().expect("frame cache poisoned");
        if let Some(frame) = cache.get(index) {
            return Ok(frame);
        }
        let frame = self.source.read_frame(index)?;
        if frame.atom_count() != self.atom_count() {
            return Err(ImportError::InconsistentAtomCount {
                frame: index,
                expected: self.atom_count(),
                actual: frame.atom_count(),
            }
            .into());
        }
        let frame = Arc::new(frame);
        cache.insert(index, Arc::clone(&frame));
        Ok(frame)
    }

    /// Number of frames currently resident in the cache.
    pub fn cached_frames(&self) -> usize {
        self.cache.lock().expect("frame cache poisoned").entries.len()
    }
}

/// In-memory frame list; handy for synthetic trajectories and tests.
pub struct FrameList {
    frames: Vec<Frame>,
    attribute_names: Vec<String>,
}

impl FrameList {
    pub fn new(frames: Vec<Frame>) -> Result<Self, ImportError> {
        let n = frames.first().map(Frame::atom_count).unwrap_or(0);
        for (k, f) in frames.iter().enumerate() {
            if f.atom_count() != n {
                return Err(ImportError::InconsistentAtomCount {
                    frame: k,
                    expected: n,
                    actual: f.atom_count(),
                });
            }
        }
        let attribute_names = frames
            .first()
            .map(|f| f.attributes.keys().cloned().collect())
            .unwrap_or_default();
        Ok(Self {
            frames,
            attribute_names,
        })
    }
}

impl FrameSource for FrameList {
    fn format_name(&self) -> &str {
        "memory"
    }

    fn frame_count(&self) -> usize {
        self.frames.len()
    }

    fn atom_count(&self) -> usize {
        self.frames.first().map(Frame::atom_count).unwrap_or(0)
    }

    fn attribute_names(&self) -> Vec<String> {
        self.attribute_names.clone()
    }

    fn read_frame(&self, index: usize) -> Result<Frame, ImportError> {
        Ok(self.frames[index].clone())
    }
}

impl Trajectory {
    pub fn from_frames(frames: Vec<Frame>, label: impl Into<String>) -> Result<Self, ImportError> {
        Ok(Self::new(Box::new(FrameList::new(frames)?), label))
    }
}
