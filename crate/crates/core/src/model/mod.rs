//! Trajectory data model: frames, periodic cells, lazily loaded trajectories
//! and the per-atom attribute store.

mod attributes;
mod frame;
mod pbc;
mod trajectory;

pub use attributes::{AttributeError, AttributeStore};
pub use frame::{Frame, FrameError, SimBox};
pub use pbc::{distance, minimum_image, norm, PeriodicCell, TriclinicUnsupported};
pub use trajectory::{FrameList, FrameSource, Trajectory, TrajectoryError, DEFAULT_CACHE_BUDGET};
