//! Configuration, run orchestration and output manifests.

pub mod config;
pub mod manifest;
pub mod run;

pub use config::{parse_config, parse_config_str, Mode, RunConfig};
pub use manifest::{verify_manifest, RunManifest};
pub use run::run;
