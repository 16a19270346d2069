//! Configuration-driven scenario runner for the duality checks in
//! `duality-core`: reads a scenario file, runs it with pinned seeds and
//! writes CSV tables, `report.json` and a plain-text summary.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod scenarios;

pub use config::{ScenarioConfig, ScenarioKind};
pub use error::{CliError, CliResult};
pub use report::{Comparison, Row, RunReport, Table};
pub use runner::{resolve_threads, run, run_config, RunOptions, THREADS_ENV};
pub use scenarios::{list_scenarios, ScenarioInfo};
