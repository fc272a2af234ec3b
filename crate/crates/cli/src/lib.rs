//! The `techprox` pipeline: configuration, stage orchestration with a
//! content-hashed run manifest, and static SVG reports.

pub mod config;
pub mod error;
pub mod fixture;
pub mod manifest;
pub mod pipeline;
pub mod svg;

pub use config::{Overrides, PipelineConfig};
pub use error::{CliError, Result};
pub use pipeline::{Outcome, Pipeline, Stage};
