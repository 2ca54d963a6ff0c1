//! Batch front end: config ingestion, scenario validation, simulation and
//! synthesis commands, deterministic CSV emission.

pub mod commands;
pub mod config;
pub mod csvfmt;
pub mod error;

pub use config::{ControlChoice, RawConfig, Scenario};
pub use error::{CliError, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
