//! CSV form of a [`Dataset`].
//!
//! One header row `x1,…,xK,z1,z2,successes,totals` followed by one row per
//! populated cell. Covariate columns may carry any names; the last four
//! column names are fixed. All values are non-negative integers, covariates
//! and exposures are 0/1.

use std::io::{Read, Write};

use intermeasure_core::model::{CovariatePattern, Dataset, ExposurePattern, StratumRecord};

const TRAILING: [&str; 4] = ["z1", "z2", "successes", "totals"];

/// Ingestion failure, with the 1-based line number where one applies.
#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    /// Problem on a specific line.
    #[error("line {line}: {message}")]
    Line { line: u64, message: String },
    /// Problem with the file as a whole.
    #[error("{0}")]
    File(String),
}

fn line_err(line: u64, message: impl Into<String>) -> CsvError {
    CsvError::Line {
        line,
        message: message.into(),
    }
}

fn from_csv(e: csv::Error) -> CsvError {
    match e.position() {
        Some(pos) => line_err(pos.line(), e.to_string()),
        None => CsvError::File(e.to_string()),
    }
}

/// Reads and validates a dataset.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(from_csv)?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.len() < TRAILING.len() || header[header.len() - 4..] != TRAILING {
        return Err(line_err(
            1,
            format!("header must end with {}, found {}", TRAILING.join(","), header.join(",")),
        ));
    }
    let n_cov = header.len() - 4;
    let covariate_names = header[..n_cov].to_vec();

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(from_csv)?;
        let line = row.position().map_or(0, |p| p.line());
        let values = row
            .iter()
            .enumerate()
            .map(|(i, field)| {
                field
                    .parse::<u64>()
                    .map_err(|_| line_err(line, format!("column {}: {field:?} is not a non-negative integer", header[i])))
            })
            .collect::<Result<Vec<u64>, _>>()?;
        let binary = |i: usize| -> Result<bool, CsvError> {
            match values[i] {
                0 => Ok(false),
                1 => Ok(true),
                v => Err(line_err(line, format!("column {}: {v} is not 0 or 1", header[i]))),
            }
        };
        let covariates = (0..n_cov).map(binary).collect::<Result<Vec<_>, _>>()?;
        let exposures = ExposurePattern::new(binary(n_cov)?, binary(n_cov + 1)?);
        let record = StratumRecord::new(
            CovariatePattern::new(covariates),
            exposures,
            values[n_cov + 2],
            values[n_cov + 3],
        )
        .map_err(|e| line_err(line, e.to_string()))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CsvError::File("no data rows".into()));
    }
    Dataset::new(covariate_names, records).map_err(|e| CsvError::File(e.to_string()))
}

/// Writes a dataset in the ingestion format.
pub fn write_dataset<W: Write>(data: &Dataset, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<&str> = data
        .covariate_names()
        .iter()
        .map(String::as_str)
        .chain(TRAILING)
        .collect();
    w.write_record(&header)?;
    for r in data.records() {
        let mut fields: Vec<String> = r.covariates.bits().iter().map(u8::to_string).collect();
        fields.push((r.exposures.z1 as u8).to_string());
        fields.push((r.exposures.z2 as u8).to_string());
        fields.push(r.successes.to_string());
        fields.push(r.totals.to_string());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}
