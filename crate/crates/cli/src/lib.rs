//! Command-line orchestration for dedact: configuration, CSV ingestion,
//! runs, demos and reports.

pub mod config;
pub mod demo;
pub mod error;
pub mod ingest;
pub mod report;
pub mod run;

pub use config::RunConfig;
pub use demo::{biomarker_demo_config, census_demo_config, run_biomarker_demo, run_census_demo};
pub use error::{CliError, Result};
pub use ingest::ingest_csv;
pub use run::{compute, run, write_bundle, ResultBundle};
