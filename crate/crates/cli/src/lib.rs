//! Library side of the `restool` binary: config handling, the staged
//! pipeline and the run manifest.

pub mod config;
pub mod manifest;
pub mod pipeline;

pub use config::{Overrides, PipelineConfig, Resolved};
pub use manifest::{RunManifest, StageRecord};
pub use pipeline::{Pipeline, Stage, StageError};
