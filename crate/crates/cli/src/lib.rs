//! Configuration loading, command dispatch and artifact output for the
//! `stefan` binary.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, print_config, RunConfig};
pub use run::{run, RunError, RunOptions};
