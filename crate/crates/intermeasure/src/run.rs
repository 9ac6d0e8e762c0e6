//! The end-to-end pipeline behind the CLI: ingest, fit, measure, simulate,
//! write reports.

use std::fs;
use std::path::PathBuf;

use intermeasure_core::fitting::fit;
use intermeasure_core::model::{covariate_distribution, expand_dataset, Dataset};
use intermeasure_core::simci::{CovarianceChoice, SimulationConfig, SimulationOutcome};
use intermeasure_core::{fixtures, parse_formula, Error as CoreError, FitResult, MeasureId};

use crate::dataset_csv::{read_dataset, CsvError};
use crate::parallel::simulate_parallel;
use crate::report::{draws_csv, histogram_csv, Report};

/// Where the counts come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSource {
    /// CSV file in the ingestion format.
    File(PathBuf),
    /// Built-in dataset by name.
    Fixture(String),
}

/// Output families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputFormat {
    /// `report.txt`
    Table,
    /// `report.json`
    Json,
    /// `coefficients.csv`, `measures.csv`, `hist_<measure>.csv`, `draws.csv`
    Csv,
}

/// Everything one invocation needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: InputSource,
    pub formula: String,
    pub simulation: SimulationConfig,
    pub histogram_bins: usize,
    pub out_dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

/// Pipeline failure, tagged with the stage that failed.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("input: {0}")]
    Input(String),
    #[error("model formula: {0}")]
    Formula(String),
    #[error("fit: design matrix is rank deficient: {0}")]
    RankDeficient(String),
    #[error("fit: {0}")]
    NotConverged(String),
    #[error("simulation: {0}")]
    Simulation(String),
    #[error("output: {0}")]
    Output(String),
}

impl RunError {
    /// Process exit code; 2 is left to argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input(_) => 3,
            RunError::Formula(_) => 4,
            RunError::RankDeficient(_) => 5,
            RunError::NotConverged(_) => 6,
            RunError::Simulation(_) => 7,
            RunError::Output(_) => 8,
        }
    }
}

/// In-memory results of a successful run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: Report,
    pub fit: FitResult,
    pub outcome: SimulationOutcome,
    pub written: Vec<PathBuf>,
}

/// Loads the configured input.
pub fn load_input(source: &InputSource) -> Result<(String, Dataset), RunError> {
    match source {
        InputSource::Fixture(name) if name == fixtures::NGUYEN2008 => {
            let data = read_dataset(crate::NGUYEN2008_CSV.as_bytes()).map_err(|e| RunError::Input(e.to_string()))?;
            Ok((format!("fixture:{name}"), data))
        }
        InputSource::Fixture(name) => Err(RunError::Input(format!(
            "unknown fixture {name:?} (available: {})",
            fixtures::NGUYEN2008
        ))),
        InputSource::File(path) => {
            let file = fs::File::open(path).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
            let data = read_dataset(file).map_err(|e: CsvError| RunError::Input(format!("{}: {e}", path.display())))?;
            Ok((path.display().to_string(), data))
        }
    }
}

/// Runs the whole pipeline and writes the requested files.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    let (source, data) = load_input(&config.input)?;
    let spec = parse_formula(&config.formula, data.covariate_names()).map_err(|e| RunError::Formula(e.to_string()))?;
    let grouped = expand_dataset(&data, &spec).map_err(|e| RunError::Input(e.to_string()))?;
    let dist = covariate_distribution(&data).map_err(|e| RunError::Input(e.to_string()))?;

    let fitted = fit(&grouped.design, &grouped.successes, &grouped.totals, spec.link()).map_err(|e| match e {
        CoreError::Singular { .. } => RunError::RankDeficient(e.to_string()),
        other => RunError::Input(other.to_string()),
    })?;
    if !fitted.converged {
        return Err(RunError::NotConverged(format!(
            "maximum likelihood did not converge after {} iterations (max |score| = {:e}, separation suspected: {})",
            fitted.iterations, fitted.max_abs_score, fitted.separation_suspected
        )));
    }

    let outcome = simulate_parallel(&fitted, &spec, &dist, &config.simulation).map_err(|e| match e {
        CoreError::NotConverged(m) => RunError::NotConverged(m),
        other => RunError::Simulation(other.to_string()),
    })?;
    let report = Report::build(&source, &data, &config.formula, &spec, &fitted, &dist, &outcome);
    let written = write_outputs(config, &report, &outcome)?;
    Ok(RunSummary {
        report,
        fit: fitted,
        outcome,
        written,
    })
}

fn write_outputs(config: &RunConfig, report: &Report, outcome: &SimulationOutcome) -> Result<Vec<PathBuf>, RunError> {
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| RunError::Output(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: &str| -> Result<(), RunError> {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| RunError::Output(format!("{}: {e}", path.display())))?;
        written.push(path);
        Ok(())
    };
    let csv_err = |e: csv::Error| RunError::Output(e.to_string());

    let mut formats = config.formats.clone();
    formats.sort();
    formats.dedup();
    for format in formats {
        match format {
            OutputFormat::Table => put("report.txt", &report.to_text())?,
            OutputFormat::Json => put("report.json", &report.to_json())?,
            OutputFormat::Csv => {
                put("coefficients.csv", &report.coefficients_csv().map_err(csv_err)?)?;
                put("measures.csv", &report.measures_csv().map_err(csv_err)?)?;
                for id in MeasureId::ALL {
                    let h = histogram_csv(&outcome.get(id).draws, config.histogram_bins).map_err(csv_err)?;
                    put(&format!("hist_{}.csv", id.name().to_lowercase()), &h)?;
                }
                put("draws.csv", &draws_csv(outcome).map_err(csv_err)?)?;
            }
        }
    }
    Ok(written)
}

/// Parses `robust`, `sandwich` or `model`.
pub fn parse_covariance(name: &str) -> Option<CovarianceChoice> {
    match name {
        "robust" => Some(CovarianceChoice::Robust),
        "sandwich" => Some(CovarianceChoice::Sandwich),
        "model" | "model-based" => Some(CovarianceChoice::ModelBased),
        _ => None,
    }
}
