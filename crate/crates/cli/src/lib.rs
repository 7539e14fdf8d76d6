//! Experiment runner behind the `livsic` binary.

pub mod config;
pub mod experiments;
pub mod generate;
pub mod report;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use experiments::{run, RunError};
pub use generate::{generate, GenError};
pub use report::{Outcome, ReportDocument, Row};
