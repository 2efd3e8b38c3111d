//! Experiment drivers behind the `hsdelay` command.

// `!(x > y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Config, ConfigError};
pub use error::CliError;
