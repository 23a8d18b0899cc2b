//! File formats, checkpoints and the `lscm` command line on top of
//! `lscm-core`.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod embedding;
pub mod error;

pub use error::{CliError, Result};
