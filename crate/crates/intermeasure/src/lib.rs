//! File formats, parallel simulation and reporting on top of
//! `intermeasure-core`.
//!
//! The binary in `main.rs` is a thin clap front end over [`run::run`].

pub mod dataset_csv;
pub mod parallel;
pub mod report;
pub mod run;

pub use dataset_csv::{read_dataset, write_dataset, CsvError};
pub use parallel::simulate_parallel;
pub use run::{run, InputSource, OutputFormat, RunConfig, RunError, RunSummary};

/// Built-in fixture in the CSV ingestion format.
pub const NGUYEN2008_CSV: &str = include_str!("../data/nguyen2008.csv");
