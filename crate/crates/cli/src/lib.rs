//! Scenario runner behind the `iga-dual` command-line tool.

// Negated comparisons deliberately treat NaN as failing the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod signal;

pub use config::{parse_config, parse_config_str, Scenario, Study};
pub use error::CliError;
pub use output::{Cell, CsvTable};
pub use runner::run_scenario;
