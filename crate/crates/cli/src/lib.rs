//! Configuration, orchestration and serialization for the `gravcat` runner.

pub mod config;
pub mod format;
pub mod run;

pub use config::{build_config, merge_entries, parse_config, parse_entries, ConfigError, Entry, RunConfig};
pub use run::{run, CliError, RunSummary};
