//! Command-line front end for the `fbvp` library: JSON problem configs,
//! certification, solving and reproduction of the reference constants.

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;

pub use config::{Config, Overrides};
pub use error::CliError;
