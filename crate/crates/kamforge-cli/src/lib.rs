//! Batch driver for the `kamforge` engine.

pub mod config;
pub mod execute;
pub mod problem;

pub use config::{parse_config, parse_str, Command, ConfigError, RunConfig};
pub use execute::{execute, Exit, Outcome};
