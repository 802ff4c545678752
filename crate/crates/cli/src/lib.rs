//! Library side of the `shadowflow` command-line runner: configuration
//! grammar, provenance stamping, and the command implementations. The
//! binary in `main.rs` is a thin wrapper so tests can drive everything
//! in-process.

pub mod config;
pub mod provenance;
pub mod runner;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use runner::{run, CliError, Command, RunOutcome};
