use std::collections::HashMap;

use super::document::NodeId;
use super::fingerprint::Fingerprint;
use crate::nodes::Effect;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct CachedResult {
    pub outputs: Vec<Tensor>,
    pub effects: Vec<Effect>,
}

/// Memoized node results keyed by `(node, frame, fingerprint)`.
///
/// Effects are stored with the outputs so a hit replays attribute writes,
/// scene changes and plot points exactly as execution would.
#[derive(Debug, Default)]
pub struct RunCache {
    entries: HashMap<(NodeId, usize, Fingerprint), CachedResult>,
    max_entries: Option<usize>,
    hits: u64,
    misses: u64,
}

impl RunCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cache that stops accepting entries once `max` are held.
    pub fn bounded(max: usize) -> Self {
        Self {
            max_entries: Some(max),
            ..Self::default()
        }
    }

    pub fn get(&mut self, node: NodeId, frame: usize, fp: &Fingerprint) -> Option<&CachedResult> {
        let hit = self.entries.get(&(node, frame, *fp));
        if hit.is_some() {
            self.hits += 1;
        } else {
            self.misses += 1;
        }
        hit
    }

    pub fn insert(&mut self, node: NodeId, frame: usize, fp: Fingerprint, result: CachedResult) {
        if self.max_entries.is_some_and(|m| self.entries.len() >= m) {
            return;
        }
        self.entries.insert((node, frame, fp), result);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hit_and_miss_counted() {
        let mut c = RunCache::new();
        let fp = Fingerprint([1; 32]);
        assert!(c.get(1, 0, &fp).is_none());
        c.insert(1, 0, fp, CachedResult { outputs: vec![Tensor::scalar_f64(1.0)], effects: vec![] });
        assert_eq!(c.get(1, 0, &fp).unwrap().outputs[0], Tensor::scalar_f64(1.0));
        assert!(c.get(1, 1, &fp).is_none());
        assert_eq!((c.hits(), c.misses()), (1, 2));
    }

    #[test]
    fn bounded_cache_stops_growing() {
        let mut c = RunCache::bounded(1);
        let r = CachedResult { outputs: vec![], effects: vec![] };
        c.insert(1, 0, Fingerprint([0; 32]), r.clone());
        c.insert(1, 1, Fingerprint([0; 32]), r);
        assert_eq!(c.len(), 1);
    }
}
