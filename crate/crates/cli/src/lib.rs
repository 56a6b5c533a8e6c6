//! Configuration, result cache and subcommands behind the `mqb` binary.

pub mod cache;
pub mod commands;
pub mod config;

pub use cache::ResultCache;
pub use commands::{run, CliError, Command, Outcome, RunContext};
pub use config::{ConfigError, ExperimentConfig};
