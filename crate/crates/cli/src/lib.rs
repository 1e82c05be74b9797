//! Configuration, pipeline driver and report emission behind the `pucp`
//! command-line tool.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::{ExperimentConfig, Overrides, SCHEMA_VERSION};
pub use error::{CliError, ExitStatus};
pub use pipeline::{run_config, RunOutcome};
pub use report::{emit_report, parse_structured, ReportFormat};
