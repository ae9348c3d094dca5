use std::collections::BTreeMap;

use crate::nodes::NodeError;

pub const DEFAULT_FADE_STEP: f64 = 0.05;

/// Carries a binary label onto the current cluster that overlaps it most.
///
/// For every cluster `c` of at least `min_size` members, count how many of
/// its members were labeled before. The cluster with the largest nonzero
/// count (smallest id on ties) is labeled 1 and everything else 0. When no
/// cluster has a labeled member the labels are cleared.
pub fn track_cluster(ids: &[i64], prev: &[f64], min_size: usize) -> Result<Vec<f64>, NodeError> {
    if ids.len() != prev.len() {
        return Err(NodeError::ShapeMismatch {
            expected: vec![ids.len()],
            actual: vec![prev.len()],
        });
    }
    let mut size: BTreeMap<i64, usize> = BTreeMap::new();
    let mut overlap: BTreeMap<i64, usize> = BTreeMap::new();
    for (&id, &p) in ids.iter().zip(prev) {
        *size.entry(id).or_default() += 1;
        if p != 0.0 {
            *overlap.entry(id).or_default() += 1;
        }
    }
    let mut best: Option<(i64, usize)> = None;
    for (&id, &count) in &overlap {
        if size[&id] < min_size {
            continue;
        }
        if best.is_none_or(|(_, b)| count > b) {
            best = Some((id, count));
        }
    }
    Ok(match best {
        Some((tracked, _)) => ids.iter().map(|&id| if id == tracked { 1.0 } else { 0.0 }).collect(),
        None => vec![0.0; ids.len()],
    })
}

/// Moves each channel value by `step` toward 1 when labeled and toward 0 otherwise.
pub fn labels2colors(label: &[f64], prev: &[f64], step: f64) -> Result<Vec<f64>, NodeError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(NodeError::BadStep { step });
    }
    if label.len() != prev.len() {
        return Err(NodeError::ShapeMismatch {
            expected: vec![label.len()],
            actual: vec![prev.len()],
        });
    }
    Ok(label
        .iter()
        .zip(prev)
        .map(|(&l, &p)| {
            let v = if l != 0.0 { p + step } else { p - step };
            v.clamp(0.0, 1.0)
        })
        .collect())
}

pub fn combine_channels(a: &[f64], b: &[f64]) -> Result<Vec<f64>, NodeError> {
    if a.len() != b.len() {
        return Err(NodeError::ShapeMismatch {
            expected: vec![a.len()],
            actual: vec![b.len()],
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x.max(*y)).collect())
}

/// Blue (0) to red (1) gradient as opaque RGBA.
pub fn channel_to_rgba(c: f64) -> [f64; 4] {
    let c = c.clamp(0.0, 1.0);
    [c, 0.0, 1.0 - c, 1.0]
}
