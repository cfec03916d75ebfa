//! Configuration, manifests and pipeline stages of the `ks-narmax` tool.

pub mod config;
pub mod error;
pub mod manifest;
pub mod stages;

pub use config::{ExperimentConfig, Preset};
pub use error::CliError;
