//! File formats, configuration, a parallel ensemble runner and the
//! subcommands behind the `rpurity` binary.
//!
//! Exit codes: 0 on success, 1 for runtime or physics failures, 2 for
//! malformed input.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod runner;

pub use error::{CliError, CliResult};
