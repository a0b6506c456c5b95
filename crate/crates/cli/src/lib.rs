//! Command-line front end: configuration, file formats, parallel drivers and
//! the `simulate` / `project` / `mimic` / `validate` / `pipeline` commands.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;

pub use commands::{run, Command, Options};
pub use error::{CliError, CliResult};
