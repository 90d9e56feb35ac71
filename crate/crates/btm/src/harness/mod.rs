//! Experiment drivers, deterministic seeding, result persistence, and
//! the command line interface.

pub mod calibration;
mod cli;
mod config;
mod experiments;
mod output;
pub mod planted;

pub use cli::run as cli_run;
pub use config::{ExperimentConfig, ExperimentKind, OutputFormat};
pub use experiments::{run, summarize};
pub use output::{validate_result_json, ExperimentResult, Provenance, SCHEMA_VERSION};
