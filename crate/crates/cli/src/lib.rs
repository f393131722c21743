//! Experiment harness for the `lrsparse` solver: planted-instance runs,
//! sweeps, matrix files and the command-line front end.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;

pub use config::ExperimentSpec;
pub use error::{CliError, Result};
