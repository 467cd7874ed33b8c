//! Command line driver: configuration loading, subcommands and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{execute, Command, Report};
pub use config::{load_config, parse_config, RunConfig};
pub use error::{CliError, Status};
