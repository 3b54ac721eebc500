//! Configuration, file formats and the command implementations behind the CLI.

pub mod commands;
pub mod config;
pub mod counts;

pub use commands::{run, Invocation, RunManifest, Subcommand};
pub use counts::{parse_counts_csv, write_counts_csv};
