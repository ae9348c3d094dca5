use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::document::{Direction, NodeId};
use crate::nodes::PlotMode;
use crate::scene::SceneDelta;

/// A node failure, addressed by node and frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFailure {
    pub node: NodeId,
    pub label: String,
    pub frame: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame: usize,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<NodeFailure>,
    pub executed: u64,
    pub cache_hits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub mode: PlotMode,
    pub points: Vec<(f64, f64)>,
}

impl PlotSeries {
    pub fn new(mode: PlotMode) -> Self {
        Self { mode, points: Vec::new() }
    }

    /// CSV with a `frame,value` header (`index,value` for lines mode).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(match self.mode {
            PlotMode::LinesAccumulate => "frame,value\n",
            PlotMode::Lines => "index,value\n",
        });
        for (x, y) in &self.points {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: RunStatus,
    pub frames_done: usize,
    pub errors: usize,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

/// Deterministic record of a run; wall-clock timings live in [`RunTimings`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub direction: Direction,
    /// Frames in visit order.
    pub frames: Vec<usize>,
    pub status: RunStatus,
    pub frame_reports: Vec<FrameReport>,
    pub errors: Vec<NodeFailure>,
    pub cache_hits: u64,
    pub cache_misses: u64,
    /// Attributes written by nodes during the run.
    pub attributes: Vec<String>,
    #[serde(skip)]
    pub plots: BTreeMap<String, PlotSeries>,
}

impl RunReport {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            status: self.status,
            frames_done: self.frame_reports.len(),
            errors: self.errors.len(),
            cache_hits: self.cache_hits,
            cache_misses: self.cache_misses,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTimings {
    pub frames: Vec<(usize, Duration)>,
    pub total: Duration,
}

/// Progress notifications, in execution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum RunEvent {
    RunStarted {
        frames: Vec<usize>,
        direction: Direction,
    },
    /// Emitted for every visited frame; `plots` holds the values appended this frame.
    FrameDone {
        frame: usize,
        ok: bool,
        plots: BTreeMap<String, f64>,
    },
    NodeError(NodeFailure),
    RunFinished {
        summary: RunSummary,
    },
}

pub trait RunObserver {
    /// `scene` is the committed delta when the event is a successful `FrameDone`.
    /// Returning `Break` cancels the run at the next frame boundary.
    fn on_event(&mut self, event: &RunEvent, scene: Option<&SceneDelta>) -> ControlFlow<()>;
}

pub struct NoopObserver;

impl RunObserver for NoopObserver {
    fn on_event(&mut self, _: &RunEvent, _: Option<&SceneDelta>) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }
}

impl<F> RunObserver for F
where
    F: FnMut(&RunEvent, Option<&SceneDelta>) -> ControlFlow<()>,
{
    fn on_event(&mut self, event: &RunEvent, scene: Option<&SceneDelta>) -> ControlFlow<()> {
        self(event, scene)
    }
}
