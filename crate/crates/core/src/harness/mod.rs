//! Configuration-driven experiments over the crawler ladder.
//!
//! An [`ExperimentConfig`] (TOML, see `docs/config.md`) names methods, levels
//! and seeds. [`run_experiment`] runs the full grid in parallel and returns
//! per-seed rows, the aggregated [`ResultsTable`] (CSV) and JSONL log lines.

mod config;
mod run;
mod table;

use thiserror::Error;

pub use config::{Budget, DiscoverySettings, Environment, Evaluation, ExperimentConfig, Method};
pub use run::{run_experiment, run_one, write_log, CellTag, ExperimentOutcome, LogLine};
pub use table::{read_rows, write_rows, ResultRow, ResultsTable, RunRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("io: {0}")]
    Io(String),
}
