//! Experiment runner for the EEGNet reference implementation: config
//! parsing, dataset assembly, fold execution and report writing.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{exit_code, CliError};
