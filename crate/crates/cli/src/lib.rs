//! Command-line front end for the cockpit simulation workbench: run
//! configuration, file formats, a parallel renderer backend and the
//! `simulate`, `snapshot`, `metrics`, `analyze` and `gen-scene` commands.

pub mod commands;
pub mod config;
pub mod exec;
pub mod formats;

pub use commands::{execute, run};
pub use config::RunConfig;
