//! Sessions: one trajectory, one graph, the artifacts of the last run.

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use mdflow_core::graph::{
    execute_trajectory, Direction, DocumentError, Graph, GraphDocument, PlotSeries, RunCache, RunEvent, RunObserver,
    RunOptions, RunReport, RunSpec,
};
use mdflow_core::nodes::Catalog;
use mdflow_core::output::write_artifacts;
use mdflow_core::scene::{resolve_scene, SceneDefaults, SceneDelta, SceneSnapshot};
use mdflow_core::{AttributeStore, Trajectory};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::error::ApiError;

/// Body of `POST /api/session/{id}/run`. Absent fields fall back to the
/// graph's `run` block.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunRequest {
    pub frames: Option<String>,
    pub direction: Option<Direction>,
    pub continue_on_error: Option<bool>,
    pub no_cache: bool,
    /// Writes the out-dir artifacts here when the run ends.
    pub out_dir: Option<PathBuf>,
    /// Respond only after the run has finished.
    pub wait: bool,
}

/// Merges request overrides into the graph's run block.
pub fn run_options(spec: Option<&RunSpec>, req: &RunRequest) -> Result<RunOptions, DocumentError> {
    let mut opts = RunOptions::from_spec(&spec.cloned().unwrap_or_default())?;
    if let Some(f) = &req.frames {
        opts.range = f.parse()?;
    }
    if let Some(d) = req.direction {
        opts.direction = d;
    }
    if let Some(c) = req.continue_on_error {
        opts.continue_on_error = c;
    }
    opts.use_cache = !req.no_cache;
    Ok(opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum SessionStatus {
    Idle,
    Running { done: usize, total: usize },
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub run_id: u64,
    pub report: RunReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub written: Option<Vec<PathBuf>>,
}

struct State {
    graph: GraphDocument,
    running: bool,
    failed: bool,
    runs: u64,
    store: AttributeStore,
    scenes: BTreeMap<usize, SceneDelta>,
    plots: BTreeMap<String, PlotSeries>,
    report: Option<RunReport>,
    cache: RunCache,
    snapshots: BTreeMap<usize, Arc<SceneSnapshot>>,
}

pub struct Session {
    pub id: String,
    pub trajectory: Arc<Trajectory>,
    state: Mutex<State>,
    events: broadcast::Sender<String>,
    cancel: Arc<AtomicBool>,
    progress: Arc<AtomicUsize>,
    total: AtomicUsize,
    defaults: SceneDefaults,
}

/// Forwards engine events to subscribers and polls the stop flag.
struct Relay {
    events: broadcast::Sender<String>,
    cancel: Arc<AtomicBool>,
    progress: Arc<AtomicUsize>,
}

impl RunObserver for Relay {
    fn on_event(&mut self, event: &RunEvent, _: Option<&SceneDelta>) -> ControlFlow<()> {
        if let RunEvent::FrameDone { .. } = event {
            self.progress.fetch_add(1, Ordering::SeqCst);
        }
        if let Ok(text) = serde_json::to_string(event) {
            // No subscribers is fine.
            let _ = self.events.send(text);
        }
        if self.cancel.load(Ordering::SeqCst) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }
}

impl Session {
    pub fn new(id: String, trajectory: Trajectory) -> Self {
        let (events, _) = broadcast::channel(4096);
        Self {
            id,
            trajectory: Arc::new(trajectory),
            state: Mutex::new(State {
                graph: GraphDocument {
                    nodes: vec![],
                    connections: vec![],
                    run: None,
                    ui: None,
                },
                running: false,
                failed: false,
                runs: 0,
                store: AttributeStore::new(),
                scenes: BTreeMap::new(),
                plots: BTreeMap::new(),
                report: None,
                cache: RunCache::new(),
                snapshots: BTreeMap::new(),
            }),
            events,
            cancel: Arc::new(AtomicBool::new(false)),
            progress: Arc::new(AtomicUsize::new(0)),
            total: AtomicUsize::new(0),
            defaults: SceneDefaults::default(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn subscribe(&self) -> broadcast::Receiver<String> {
        self.events.subscribe()
    }

    pub fn status(&self) -> SessionStatus {
        let s = self.lock();
        if s.running {
            SessionStatus::Running {
                done: self.progress.load(Ordering::SeqCst),
                total: self.total.load(Ordering::SeqCst),
            }
        } else if s.failed {
            SessionStatus::Error
        } else {
            SessionStatus::Idle
        }
    }

    pub fn graph(&self) -> GraphDocument {
        self.lock().graph.clone()
    }

    /// Validates and stores a graph; edits are refused while a run is active.
    pub fn set_graph(&self, doc: GraphDocument, catalog: &Catalog) -> Result<Vec<mdflow_core::graph::Diagnostic>, ApiError> {
        let graph = Graph::from_document(&doc, catalog).map_err(ApiError::invalid_graph)?;
        let warnings = graph.unconnected_inputs();
        let mut s = self.lock();
        if s.running {
            return Err(ApiError::conflict("graph edits are rejected while a run is active"));
        }
        s.graph = doc;
        Ok(warnings)
    }

    /// Claims the session for a run and returns what the worker needs.
    pub fn begin_run(&self, req: &RunRequest, catalog: &Catalog) -> Result<(u64, Graph, RunOptions, Option<RunCache>), ApiError> {
        let mut s = self.lock();
        if s.running {
            return Err(ApiError::conflict(format!("session {} is already running", self.id)));
        }
        let opts = run_options(s.graph.run.as_ref(), req).map_err(|e| ApiError::bad_request("BadRange", e.to_string()))?;
        let graph = Graph::from_document(&s.graph, catalog).map_err(ApiError::invalid_graph)?;
        let count = self.trajectory.frame_count();
        let frames = opts.range.frames(count, opts.direction).ok_or_else(|| {
            ApiError::bad_request("RangeOutOfBounds", format!("frame range {} is outside 0:{count}", opts.range))
        })?;
        let missing = graph.unconnected_inputs();
        if !missing.is_empty() {
            return Err(ApiError::invalid_graph(missing));
        }
        s.running = true;
        s.runs += 1;
        self.cancel.store(false, Ordering::SeqCst);
        self.progress.store(0, Ordering::SeqCst);
        self.total.store(frames.len(), Ordering::SeqCst);
        let cache = (!req.no_cache).then(|| std::mem::take(&mut s.cache));
        Ok((s.runs, graph, opts, cache))
    }

    /// Executes a claimed run on the current thread and records its artifacts.
    pub fn execute(
        &self,
        run_id: u64,
        mut graph: Graph,
        opts: RunOptions,
        mut cache: Option<RunCache>,
        out_dir: Option<PathBuf>,
    ) -> Result<RunResult, ApiError> {
        let mut relay = Relay {
            events: self.events.clone(),
            cancel: Arc::clone(&self.cancel),
            progress: Arc::clone(&self.progress),
        };
        // A fresh store per run keeps results independent of earlier runs.
        let mut store = AttributeStore::new();
        let result = execute_trajectory(&mut graph, &self.trajectory, &mut store, cache.as_mut(), &opts, &mut relay);
        drop(graph);

        let mut s = self.lock();
        s.running = false;
        if let Some(c) = cache {
            s.cache = c;
        }
        let output = match result {
            Ok(o) => o,
            Err(e) => {
                s.failed = true;
                return Err(ApiError::new(axum::http::StatusCode::UNPROCESSABLE_ENTITY, "RunError", e.to_string()));
            }
        };
        s.failed = !output.report.errors.is_empty();
        let written = match &out_dir {
            Some(dir) => Some(
                write_artifacts(dir, &self.trajectory, &output, &store, &self.defaults)
                    .map_err(|e| ApiError::internal(e.to_string()))?,
            ),
            None => None,
        };
        s.store = store;
        s.scenes = output.scenes;
        s.plots = output.report.plots.clone();
        s.snapshots.clear();
        s.report = Some(output.report.clone());
        Ok(RunResult {
            run_id,
            report: output.report,
            written,
        })
    }

    pub fn stop(&self) -> bool {
        let running = self.lock().running;
        if running {
            self.cancel.store(true, Ordering::SeqCst);
        }
        running
    }

    /// Resolved scene for frame `k`, memoized until the next run.
    pub fn scene(&self, k: usize) -> Result<Arc<SceneSnapshot>, ApiError> {
        if let Some(s) = self.lock().snapshots.get(&k) {
            return Ok(Arc::clone(s));
        }
        let frame = self
            .trajectory
            .load_frame(k)
            .map_err(|e| ApiError::not_found("FrameNotFound", e.to_string()))?;
        let mut s = self.lock();
        let snap = Arc::new(resolve_scene(k, &frame, &self.defaults, s.scenes.get(&k)));
        s.snapshots.insert(k, Arc::clone(&snap));
        Ok(snap)
    }

    pub fn attribute(&self, name: &str, k: usize) -> Option<Vec<f64>> {
        self.lock().store.get(name, k).map(<[f64]>::to_vec)
    }

    pub fn plot(&self, label: &str) -> Option<PlotSeries> {
        self.lock().plots.get(label).cloned()
    }

    pub fn last_report(&self) -> Option<RunReport> {
        self.lock().report.clone()
    }
}
