//! Command-line front end: JSONL ingestion, batch aggregation, metric
//! reports, synthetic data and built-in self-checks.

pub mod app;
pub mod config;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod report;
pub mod selfcheck;
pub mod simulate;

pub use app::run_cli;
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{run, Command, RunSummary};
