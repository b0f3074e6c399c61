//! Command-line front end of the mode-sorter simulator: config parsing and
//! the `run`, `fanout-opt`, `profiles` and `modes` commands.

pub mod commands;
pub mod config;

pub use commands::{Failure, FanoutSummary, RunSummary, VERSION};
pub use config::{parse_config, parse_config_file, Overrides, RunConfig};
