//! Frame-by-frame graph execution.
//!
//! Nodes run in topological order. Attribute reads see the store as it is
//! when the node runs and attribute writes apply as soon as the writing node
//! succeeds, so a read wired before a write observes the previous value.
//! Scene changes and plot points are staged per frame and dropped if any
//! node in the frame fails.

use std::collections::{BTreeMap, HashMap};
use std::ops::ControlFlow;
use std::time::Instant;

use thiserror::Error;

use super::cache::{CachedResult, RunCache};
use super::dag::{Diagnostic, Graph, GraphError};
use super::document::{Direction, FrameRange, NodeId, RunSpec};
use super::fingerprint::{Fingerprint, FingerprintBuilder};
use super::report::{FrameReport, NodeFailure, PlotSeries, RunEvent, RunObserver, RunReport, RunStatus, RunTimings};
use crate::model::{AttributeStore, Frame, Trajectory, TrajectoryError};
use crate::nodes::{Effect, NodeContext, NodeError, PlotMode, PlotPoint, ReadMode};
use crate::scene::SceneDelta;
use crate::tensor::Tensor;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("graph has unconnected inputs: {}", .0.iter().map(|d| d.message.clone()).collect::<Vec<_>>().join("; "))]
    Unconnected(Vec<Diagnostic>),
    #[error("frame range {range} is outside 0:{count}")]
    RangeOutOfBounds { range: FrameRange, count: usize },
    #[error("frame {frame}: {source}")]
    Trajectory {
        frame: usize,
        #[source]
        source: TrajectoryError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub range: FrameRange,
    pub direction: Direction,
    pub continue_on_error: bool,
    pub use_cache: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            range: FrameRange::ALL,
            direction: Direction::Forward,
            continue_on_error: false,
            use_cache: true,
        }
    }
}

impl RunOptions {
    /// Options from a graph's `run` block; an invalid range string is an error.
    pub fn from_spec(spec: &RunSpec) -> Result<Self, super::document::DocumentError> {
        Ok(Self {
            range: match &spec.frames {
                Some(s) => s.parse()?,
                None => FrameRange::ALL,
            },
            direction: spec.direction,
            continue_on_error: spec.continue_on_error,
            use_cache: true,
        })
    }
}

/// Result of executing one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub report: FrameReport,
    /// Committed scene delta; `None` when the frame failed.
    pub delta: Option<SceneDelta>,
    /// Plot values appended by this frame, by series name.
    pub plot_values: BTreeMap<String, f64>,
}

struct Step {
    id: NodeId,
    label: String,
    kind: String,
    sources: Vec<(NodeId, usize)>,
}

/// Executes a graph over frames, carrying run state between them.
pub struct Executor<'g> {
    graph: &'g mut Graph,
    steps: Vec<Step>,
    identity: String,
    carry: HashMap<String, Vec<f64>>,
    plots: BTreeMap<String, PlotSeries>,
    visited: usize,
}

impl<'g> Executor<'g> {
    /// Prepares a run; `identity` names the trajectory in cache keys.
    pub fn new(graph: &'g mut Graph, identity: impl Into<String>) -> Result<Self, RunError> {
        let order = graph.topo_order()?;
        let missing = graph.unconnected_inputs();
        if !missing.is_empty() {
            return Err(RunError::Unconnected(missing));
        }
        let steps = order
            .into_iter()
            .map(|id| {
                let node = graph.node(id).expect("ordered node exists");
                let sources = (0..node.signature().inputs.len())
                    .map(|i| graph.input_source(id, i).expect("inputs checked"))
                    .collect();
                Step {
                    id,
                    label: node.label(),
                    kind: node.kind.to_string(),
                    sources,
                }
            })
            .collect();
        Ok(Self {
            graph,
            steps,
            identity: identity.into(),
            carry: HashMap::new(),
            plots: BTreeMap::new(),
            visited: 0,
        })
    }

    pub fn plots(&self) -> &BTreeMap<String, PlotSeries> {
        &self.plots
    }

    pub fn into_plots(self) -> BTreeMap<String, PlotSeries> {
        self.plots
    }

    /// Attributes written by nodes so far in this run, sorted.
    pub fn written_attributes(&self) -> Vec<String> {
        let mut names: Vec<String> = self.carry.keys().cloned().collect();
        names.sort();
        names
    }

    fn resolve_read(&self, store: &mut AttributeStore, frame: &Frame, k: usize, name: &str, mode: ReadMode) -> Vec<f64> {
        let n = frame.atom_count();
        match mode {
            ReadMode::Frame => store.read(name, k, n).to_f64_vec(),
            ReadMode::Carry => match self.carry.get(name) {
                Some(v) if v.len() == n => v.clone(),
                _ => match frame.attributes.get(name) {
                    Some(v) if v.len() == n => v.clone(),
                    _ => vec![0.0; n],
                },
            },
        }
    }

    /// Runs every node on frame `k`.
    pub fn execute_frame(
        &mut self,
        k: usize,
        frame: &Frame,
        store: &mut AttributeStore,
        mut cache: Option<&mut RunCache>,
    ) -> FrameOutcome {
        let first_visit = self.visited == 0;
        self.visited += 1;
        let n = frame.atom_count();
        for (name, values) in &frame.attributes {
            if !store.is_defined(name, k) {
                store
                    .write_slice(name, k, values, n)
                    .expect("imported attribute has one value per atom");
            }
        }

        let mut values: HashMap<(NodeId, usize), Tensor> = HashMap::new();
        let mut delta = SceneDelta::default();
        let mut pending_plots: Vec<(String, PlotPoint)> = Vec::new();
        let mut report = FrameReport {
            frame: k,
            ok: true,
            error: None,
            executed: 0,
            cache_hits: 0,
        };

        for s in 0..self.steps.len() {
            let step = &self.steps[s];
            let inputs: Vec<Tensor> = step.sources.iter().map(|src| values[src].clone()).collect();
            let node = self.graph.node(step.id).expect("step node exists");
            let implicit = node.op.implicit();
            let attrs: Vec<Vec<f64>> = implicit
                .attributes
                .iter()
                .map(|r| self.resolve_read(store, frame, k, &r.name, r.mode))
                .collect();

            let cacheable = node.op.cacheable();
            let fp = match (&cache, cacheable) {
                (Some(_), true) => Some(self.fingerprint(s, k, first_visit, &inputs, &implicit, &attrs, &delta)),
                _ => None,
            };
            let cached = match (cache.as_deref_mut(), &fp) {
                (Some(c), Some(fp)) => c.get(step.id, k, fp).cloned(),
                _ => None,
            };

            let step = &self.steps[s];
            let (outputs, effects) = match cached {
                Some(hit) => {
                    report.cache_hits += 1;
                    (hit.outputs, hit.effects)
                }
                None => {
                    let node = self.graph.node_mut(step.id).expect("step node exists");
                    let mut ctx = NodeContext::new(k, frame, &attrs, &delta);
                    ctx.first_visit = first_visit;
                    report.executed += 1;
                    let result = node
                        .op
                        .execute(&mut ctx, &inputs)
                        .and_then(|out| check_outputs(node.op.signature(), out));
                    match result {
                        Ok(out) => {
                            let effects = ctx.take_effects();
                            if let (Some(c), Some(fp)) = (cache.as_deref_mut(), fp) {
                                c.insert(
                                    step.id,
                                    k,
                                    fp,
                                    CachedResult {
                                        outputs: out.clone(),
                                        effects: effects.clone(),
                                    },
                                );
                            }
                            (out, effects)
                        }
                        Err(e) => return self.fail(report, s, k, e),
                    }
                }
            };

            for effect in effects {
                match effect {
                    Effect::WriteAttribute { name, values: v } => {
                        if let Err(e) = store.write_slice(&name, k, &v, n) {
                            return self.fail(report, s, k, e.into());
                        }
                        self.carry.insert(name, v);
                    }
                    Effect::Scene(op) => delta.apply(&op),
                    Effect::Plot(p) => pending_plots.push((self.steps[s].label.clone(), p)),
                }
            }
            let id = self.steps[s].id;
            for (i, t) in outputs.into_iter().enumerate() {
                values.insert((id, i), t);
            }
        }

        let mut plot_values = BTreeMap::new();
        for (label, point) in pending_plots {
            match point {
                PlotPoint::Append(v) => {
                    let series = self
                        .plots
                        .entry(label.clone())
                        .or_insert_with(|| PlotSeries::new(PlotMode::LinesAccumulate));
                    series.points.push((k as f64, v));
                    plot_values.insert(label, v);
                }
                PlotPoint::Replace(vs) => {
                    let series = self.plots.entry(label).or_insert_with(|| PlotSeries::new(PlotMode::Lines));
                    series.points = vs.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
                }
            }
        }
        FrameOutcome {
            report,
            delta: Some(delta),
            plot_values,
        }
    }

    fn fail(&self, mut report: FrameReport, s: usize, k: usize, e: NodeError) -> FrameOutcome {
        let step = &self.steps[s];
        report.ok = false;
        report.error = Some(NodeFailure {
            node: step.id,
            label: step.label.clone(),
            frame: k,
            message: e.to_string(),
        });
        FrameOutcome {
            report,
            delta: None,
            plot_values: BTreeMap::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn fingerprint(
        &self,
        s: usize,
        k: usize,
        first_visit: bool,
        inputs: &[Tensor],
        implicit: &crate::nodes::Implicit,
        attrs: &[Vec<f64>],
        delta: &SceneDelta,
    ) -> Fingerprint {
        let step = &self.steps[s];
        let node = self.graph.node(step.id).expect("step node exists");
        let mut b = FingerprintBuilder::new();
        b.str(b"trajectory", &self.identity)
            .str(b"kind", &step.kind)
            .str(b"identity", &node.op.identity())
            .str(b"params", &node.params.canonical_json())
            .u64(b"frame", k as u64)
            .u64(b"first", first_visit as u64);
        for t in inputs {
            b.tensor(t);
        }
        for (r, v) in implicit.attributes.iter().zip(attrs) {
            b.str(b"attr", &r.name)
                .u64(b"mode", (r.mode == ReadMode::Carry) as u64)
                .f64s(b"values", v);
        }
        if implicit.visibility {
            let hidden: Vec<u8> = delta.hidden.iter().flat_map(|&i| (i as u64).to_le_bytes()).collect();
            b.bytes(b"hidden", &hidden);
        }
        b.finish()
    }
}

fn check_outputs(sig: &super::Signature, out: Vec<Tensor>) -> Result<Vec<Tensor>, NodeError> {
    if out.len() != sig.outputs.len() {
        return Err(NodeError::Invalid(format!(
            "node produced {} outputs, declared {}",
            out.len(),
            sig.outputs.len()
        )));
    }
    for (t, port) in out.iter().zip(&sig.outputs) {
        if !port.ty.accepts(t) {
            return Err(NodeError::Invalid(format!(
                "output `{}` has {}{:?}, declared {}",
                port.name,
                t.dtype(),
                t.shape(),
                port.ty
            )));
        }
    }
    Ok(out)
}

/// Everything a run produces besides the attribute store.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    /// Committed scene deltas of successful frames.
    pub scenes: BTreeMap<usize, SceneDelta>,
    pub timings: RunTimings,
}

/// Runs `graph` over the frames selected by `opts`.
///
/// Attribute state threads through frames in visit order. Frame-level node
/// errors end up in the report; the run stops at the first one unless
/// `continue_on_error` is set.
pub fn execute_trajectory(
    graph: &mut Graph,
    traj: &Trajectory,
    store: &mut AttributeStore,
    mut cache: Option<&mut RunCache>,
    opts: &RunOptions,
    observer: &mut dyn RunObserver,
) -> Result<RunOutput, RunError> {
    let started = Instant::now();
    let count = traj.frame_count();
    let frames = opts
        .range
        .frames(count, opts.direction)
        .ok_or(RunError::RangeOutOfBounds { range: opts.range, count })?;
    if !opts.use_cache {
        cache = None;
    }
    let (hits0, misses0) = cache.as_ref().map_or((0, 0), |c| (c.hits(), c.misses()));
    let mut exec = Executor::new(graph, traj.identity())?;

    let mut reports = Vec::with_capacity(frames.len());
    let mut errors = Vec::new();
    let mut scenes = BTreeMap::new();
    let mut timings = RunTimings::default();
    let mut status = RunStatus::Completed;
    let mut cancelled = observer
        .on_event(
            &RunEvent::RunStarted {
                frames: frames.clone(),
                direction: opts.direction,
            },
            None,
        )
        .is_break();

    for &k in &frames {
        if cancelled {
            status = RunStatus::Cancelled;
            break;
        }
        let t0 = Instant::now();
        let frame = traj.load_frame(k).map_err(|source| RunError::Trajectory { frame: k, source })?;
        let outcome = exec.execute_frame(k, &frame, store, cache.as_deref_mut());
        timings.frames.push((k, t0.elapsed()));

        let mut flow = ControlFlow::Continue(());
        if let Some(err) = &outcome.report.error {
            errors.push(err.clone());
            flow = observer.on_event(&RunEvent::NodeError(err.clone()), None);
        }
        let done = RunEvent::FrameDone {
            frame: k,
            ok: outcome.report.ok,
            plots: outcome.plot_values.clone(),
        };
        if observer.on_event(&done, outcome.delta.as_ref()).is_break() {
            flow = ControlFlow::Break(());
        }
        let ok = outcome.report.ok;
        reports.push(outcome.report);
        if let Some(d) = outcome.delta {
            scenes.insert(k, d);
        }
        if !ok && !opts.continue_on_error {
            status = RunStatus::Failed;
            break;
        }
        cancelled = flow.is_break();
    }
    if cancelled && status == RunStatus::Completed && reports.len() < frames.len() {
        status = RunStatus::Cancelled;
    }

    let (hits1, misses1) = cache.as_ref().map_or((0, 0), |c| (c.hits(), c.misses()));
    let report = RunReport {
        direction: opts.direction,
        frames: reports.iter().map(|r| r.frame).collect(),
        status,
        frame_reports: reports,
        errors,
        cache_hits: hits1 - hits0,
        cache_misses: misses1 - misses0,
        attributes: exec.written_attributes(),
        plots: exec.into_plots(),
    };
    let _ = observer.on_event(&RunEvent::RunFinished { summary: report.summary() }, None);
    timings.total = started.elapsed();
    Ok(RunOutput { report, scenes, timings })
}
