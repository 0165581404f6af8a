//! Experiment driver for `bergman-core`: TOML configuration, convergence and
//! gap scans across `k`, report files and the `bergman-lab` CLI.

pub mod config;
mod error;
pub mod harness;
pub mod output;

pub use config::ExperimentConfig;
pub use error::LabError;
