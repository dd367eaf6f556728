//! Configuration loading, command orchestration and file output for the
//! `spinamp` tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{compute, run_command, Command, Payload, RunOutcome};
pub use config::{load_config, parse_config, RunConfig};
pub use error::CliError;
