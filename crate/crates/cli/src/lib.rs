//! Command-line orchestration: configuration, the stage commands, the synthetic
//! corpus and run manifests.

pub mod config;
pub mod error;
pub mod manifest;
pub mod stages;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;
