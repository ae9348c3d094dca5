//! Checks shared by the per-area integration tests and the acceptance run.
#![allow(dead_code)]

pub mod clusters;
pub mod engine;
pub mod formats;
pub mod hydrate;
pub mod protocol;
