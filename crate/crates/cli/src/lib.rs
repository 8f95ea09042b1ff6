//! Command-line driver for `slipinv`: synthetic data, inversion, DIC scans,
//! hyperparameter optimization and summaries.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;
pub mod gridspec;
pub mod heatmap;

pub use commands::{run, Command};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
