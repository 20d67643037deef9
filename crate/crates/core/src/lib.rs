//! Composite resilience scoring for regions × years × indicators panels, and
//! the spatial statistics used to describe how those scores evolve: weighted
//! standard-deviational ellipses, (conditional) kernel densities, and the
//! geographical detector.
//!
//! The modules follow the analysis pipeline:
//!
//! - [`ingest`]: panel, centroid, adjacency and driver files; gap filling.
//! - [`index`]: min-max and fixed-base standardization, weights, scores, levels.
//! - [`ellipse`]: weighted mean centre and standard-deviational ellipse.
//! - [`density`]: Gaussian KDE, joint and conditional densities.
//! - [`detector`]: factor, interaction, risk and ecological detectors.

pub mod density;
pub mod detector;
pub mod ellipse;
mod error;
pub mod index;
pub mod ingest;
pub mod jenks;

pub use error::{Error, ErrorKind, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
