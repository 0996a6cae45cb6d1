//! Experiment runner for the asynchronous Game of Life laboratory: configs,
//! run manifests, CSV/JSON/SVG outputs and the `asyncgl` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod render_cmd;
pub mod run;

pub use config::{ConfigFile, DecayExperiment, ExperimentConfig, GateExperiment, GliderExperiment};
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;
pub use run::run_experiment;
