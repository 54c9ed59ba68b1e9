//! Command-line front end: configuration, verification suites, reports and
//! exports.

pub mod cli;
pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

/// Exit status for a run whose asserted checks all pass.
pub const EXIT_PASS: i32 = 0;
/// Exit status when at least one asserted check fails.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for usage, configuration, computation and I/O errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qjc_core::Error),
    #[error("output: {0}")]
    Io(String),
}
