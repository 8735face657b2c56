//! Command-line front end for the Walsh field-reconstruction library:
//! config parsing, scenario orchestration, and deterministic artifact I/O.

use std::fmt;

pub mod config;
pub mod output;
pub mod runner;

/// CLI failure classes, mapped onto process exit codes:
/// 2 = config error, 3 = infeasible scenario, 4 = runtime/numerical failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Infeasible(msg) => write!(f, "infeasible scenario: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}
