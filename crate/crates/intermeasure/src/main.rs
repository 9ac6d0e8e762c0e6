use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use intermeasure::run::{parse_covariance, run, InputSource, OutputFormat, RunConfig};
use intermeasure_core::simci::SimulationConfig;

/// Estimate population interaction measures (RCOR, RCRR, RMOR, RMRR, DMRD)
/// from stratified counts with one logistic model and simulation-based
/// percentile intervals.
#[derive(Debug, Parser)]
#[command(name = "intermeasure", version)]
struct Cli {
    /// CSV input: x1..xK,z1,z2,successes,totals
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    input: Option<PathBuf>,

    /// Built-in dataset (available: nguyen2008)
    #[arg(long)]
    fixture: Option<String>,

    /// Model formula, e.g. "y ~ z1 + z2 + z1:z2 + x1 + x2 + x3 + z1:x2"
    #[arg(long)]
    formula: String,

    /// Number of parameter draws
    #[arg(long, default_value_t = 1000)]
    draws: usize,

    /// Seed for the draw stream
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Central confidence levels, comma separated and increasing
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.95")]
    levels: Vec<f64>,

    /// Covariance used for the draws: robust, sandwich or model
    #[arg(long, default_value = "robust")]
    covariance: String,

    /// Histogram bins per measure
    #[arg(long, default_value_t = 50)]
    bins: usize,

    /// Output directory
    #[arg(long, default_value = "intermeasure-out")]
    out: PathBuf,

    /// Output formats, comma separated
    #[arg(long, value_delimiter = ',', default_value = "table,json,csv")]
    format: Vec<Format>,

    /// Do not print the table to stdout
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(covariance) = parse_covariance(&cli.covariance) else {
        eprintln!("error: --covariance must be robust, sandwich or model, got {:?}", cli.covariance);
        return ExitCode::from(2);
    };
    let simulation = match SimulationConfig::new(cli.draws, cli.seed, cli.levels.clone(), covariance) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let input = match (cli.input, cli.fixture) {
        (Some(path), None) => InputSource::File(path),
        (None, Some(name)) => InputSource::Fixture(name),
        _ => unreachable!("clap enforces exactly one input source"),
    };
    let config = RunConfig {
        input,
        formula: cli.formula,
        simulation,
        histogram_bins: cli.bins.max(1),
        out_dir: cli.out,
        formats: cli
            .format
            .iter()
            .map(|f| match f {
                Format::Table => OutputFormat::Table,
                Format::Json => OutputFormat::Json,
                Format::Csv => OutputFormat::Csv,
            })
            .collect(),
    };
    match run(&config) {
        Ok(summary) => {
            if !cli.quiet {
                print!("{}", summary.report.to_text());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
