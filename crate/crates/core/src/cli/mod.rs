//! File formats and the command-line subcommands.

pub mod commands;
pub mod config;
pub mod ingest;

pub use commands::{cmd_estimate, cmd_simulate, cmd_table3, estimate, write_estimate};
pub use config::{default_grid, Command, GridSpec, RunConfig, Spacing, Target};
pub use ingest::{ingest, ingest_reader, IngestReport, Schema};
