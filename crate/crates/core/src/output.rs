//! Out-dir artifacts of a run.
//!
//! ```text
//! scene_0000.json      one resolved scene per successful frame, in visit order
//! attr_<name>.ssv      positions plus one attribute column, frames ascending
//! plot_<label>.csv     one file per plot series
//! run_report.json      deterministic run report
//! run_timings.json     wall-clock timings (not reproducible)
//! ```
//!
//! Everything except `run_timings.json` is a pure function of the graph,
//! the trajectory and the run options.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{RunOutput, RunTimings};
use crate::io::{write_ssv, ColumnSpec, ImportError};
use crate::model::{AttributeStore, Trajectory, TrajectoryError};
use crate::scene::{resolve_scene, SceneDefaults};

pub const RUN_REPORT_FILE: &str = "run_report.json";
pub const RUN_TIMINGS_FILE: &str = "run_timings.json";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("attribute `{name}` cannot be written as an SSV column: {source}")]
    Column {
        name: String,
        #[source]
        source: ImportError,
    },
}

/// Replaces characters that are unsafe in file names with `_`.
pub fn file_stem(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.') { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with('.') {
        format!("_{s}")
    } else {
        s
    }
}

pub fn scene_file(frame: usize) -> String {
    format!("scene_{frame:04}.json")
}

pub fn attr_file(name: &str) -> String {
    format!("attr_{}.ssv", file_stem(name))
}

pub fn plot_file(label: &str) -> String {
    format!("plot_{}.csv", file_stem(label))
}

#[derive(Serialize)]
struct FrameTiming {
    frame: usize,
    ms: f64,
}

#[derive(Serialize)]
struct TimingsDoc {
    total_ms: f64,
    frames: Vec<FrameTiming>,
}

pub fn timings_json(t: &RunTimings) -> String {
    let doc = TimingsDoc {
        total_ms: t.total.as_secs_f64() * 1e3,
        frames: t
            .frames
            .iter()
            .map(|(k, d)| FrameTiming {
                frame: *k,
                ms: d.as_secs_f64() * 1e3,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("timings serialize") + "\n"
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<PathBuf, OutputError> {
    fs::write(&path, bytes).map_err(|source| OutputError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes all artifacts of `output` into `dir`, creating it if needed.
/// Returns the written paths in write order.
pub fn write_artifacts(
    dir: &Path,
    traj: &Trajectory,
    output: &RunOutput,
    store: &AttributeStore,
    defaults: &SceneDefaults,
) -> Result<Vec<PathBuf>, OutputError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| OutputError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let report = &output.report;
    let mut written = Vec::new();

    for &k in &report.frames {
        let Some(delta) = output.scenes.get(&k) else { continue };
        let frame = traj.load_frame(k)?;
        let snap = resolve_scene(k, &frame, defaults, Some(delta));
        written.push(write_file(dir.join(scene_file(k)), snap.to_json().as_bytes())?);
    }

    let mut ascending = report.frames.clone();
    ascending.sort_unstable();
    for name in &report.attributes {
        let spec = ColumnSpec::with_attributes(&[name]).map_err(|source| OutputError::Column {
            name: name.clone(),
            source,
        })?;
        let mut frames = Vec::new();
        for &k in &ascending {
            let Some(values) = store.get(name, k) else { continue };
            let mut f = (*traj.load_frame(k)?).clone();
            f.attributes = BTreeMap::from([(name.clone(), values.to_vec())]);
            frames.push(f);
        }
        let path = dir.join(attr_file(name));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        write_ssv(&mut w, &spec, &frames)
            .and_then(|_| w.flush())
            .map_err(io_err(&path))?;
        written.push(path);
    }

    for (label, series) in &report.plots {
        written.push(write_file(dir.join(plot_file(label)), series.to_csv().as_bytes())?);
    }

    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    written.push(write_file(dir.join(RUN_REPORT_FILE), json.as_bytes())?);
    written.push(write_file(dir.join(RUN_TIMINGS_FILE), timings_json(&output.timings).as_bytes())?);
    Ok(written)
}
