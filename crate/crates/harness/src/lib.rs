//! Sweep harness for `dswkb`: configuration, verification suites, and
//! CSV/JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod suites;

pub use config::{load_config, parse_config, ConfigError, OutputFormat, SuiteName, SweepConfig, REFERENCE_CONFIG};
pub use report::{emit, stable_json, EmitError, SweepReport};
pub use suites::{run, run_suite};
