//! Report assembly and rendering.
//!
//! [`Report`] is the JSON bundle; the text table and CSV files are rendered
//! from it so every output shows the same numbers.

use std::fmt::Write as _;

use intermeasure_core::measures::MeasureId;
use intermeasure_core::model::{CovariateDistribution, Dataset, ExposurePattern, ModelSpec};
use intermeasure_core::simci::{histogram, SimulationOutcome};
use intermeasure_core::{FitResult, Matrix};
use serde::Serialize;

/// Display label of a measure in reports.
pub fn measure_label(id: MeasureId) -> &'static str {
    match id {
        MeasureId::Dmrd => "DMRD (=DCRD)",
        other => other.name(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub input: InputSummary,
    pub model: ModelSummary,
    pub fit: FitSummary,
    pub covariate_distribution: Vec<PatternWeight>,
    pub population_risks: Vec<ExposureRisk>,
    pub simulation: SimulationSummary,
    pub measures: Vec<MeasureSummary>,
    pub collapsibility: Collapsibility,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputSummary {
    pub source: String,
    pub records: usize,
    pub n_total: u64,
    pub covariates: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub formula: String,
    pub link: &'static str,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    pub se_model: f64,
    pub se_robust: f64,
    pub se_sandwich: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub coefficients: Vec<Coefficient>,
    pub log_likelihood: f64,
    pub deviance: f64,
    pub residual_df: usize,
    pub dispersion: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub max_abs_score: f64,
    pub separation_suspected: bool,
    pub cov_model: Vec<Vec<f64>>,
    pub cov_robust: Vec<Vec<f64>>,
    pub cov_sandwich: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternWeight {
    pub pattern: Vec<u8>,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExposureRisk {
    pub z1: u8,
    pub z2: u8,
    pub risk: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub n_draws: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
    pub covariance: &'static str,
    pub cholesky_jitter: f64,
    pub clamped_draws: usize,
    pub point_clamped_risks: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Interval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureSummary {
    pub id: &'static str,
    pub label: &'static str,
    pub point: f64,
    pub median: f64,
    pub intervals: Vec<Interval>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Collapsibility {
    pub dcrd: f64,
    pub dmrd: f64,
    pub abs_difference: f64,
}

fn std_errors(m: &Matrix) -> Vec<f64> {
    (0..m.rows()).map(|i| m[(i, i)].sqrt()).collect()
}

impl Report {
    pub fn build(
        source: &str,
        data: &Dataset,
        formula: &str,
        spec: &ModelSpec,
        fit: &FitResult,
        dist: &CovariateDistribution,
        outcome: &SimulationOutcome,
    ) -> Self {
        let (se_m, se_r, se_s) = (
            std_errors(&fit.cov_model),
            std_errors(&fit.cov_robust),
            std_errors(&fit.cov_sandwich),
        );
        let coefficients = fit
            .term_names
            .iter()
            .enumerate()
            .map(|(i, term)| Coefficient {
                term: term.clone(),
                estimate: fit.coefficients[i],
                se_model: se_m[i],
                se_robust: se_r[i],
                se_sandwich: se_s[i],
            })
            .collect();
        let point = &outcome.point;
        Report {
            input: InputSummary {
                source: source.to_owned(),
                records: data.len(),
                n_total: data.n_total(),
                covariates: data.covariate_names().to_vec(),
            },
            model: ModelSummary {
                formula: formula.to_owned(),
                link: spec.link().name(),
                terms: spec.term_labels(),
            },
            fit: FitSummary {
                coefficients,
                log_likelihood: fit.log_likelihood,
                deviance: fit.deviance,
                residual_df: fit.residual_df,
                dispersion: fit.dispersion,
                iterations: fit.iterations,
                converged: fit.converged,
                max_abs_score: fit.max_abs_score,
                separation_suspected: fit.separation_suspected,
                cov_model: fit.cov_model.to_rows(),
                cov_robust: fit.cov_robust.to_rows(),
                cov_sandwich: fit.cov_sandwich.to_rows(),
            },
            covariate_distribution: dist
                .entries()
                .iter()
                .map(|(p, w)| PatternWeight {
                    pattern: p.bits(),
                    weight: *w,
                })
                .collect(),
            population_risks: ExposurePattern::ALL
                .iter()
                .map(|&z| ExposureRisk {
                    z1: z.z1 as u8,
                    z2: z.z2 as u8,
                    risk: point.population_risks.get(z),
                })
                .collect(),
            simulation: SimulationSummary {
                n_draws: outcome.config.n_draws(),
                seed: outcome.config.seed(),
                levels: outcome.config.levels().to_vec(),
                covariance: outcome.config.covariance().name(),
                cholesky_jitter: outcome.jitter,
                clamped_draws: outcome.clamped_draws,
                point_clamped_risks: point.clamped_risks,
            },
            measures: outcome
                .intervals
                .iter()
                .map(|est| MeasureSummary {
                    id: est.measure.name(),
                    label: measure_label(est.measure),
                    point: est.point,
                    median: est.median(),
                    intervals: est
                        .endpoints
                        .iter()
                        .map(|e| Interval {
                            level: e.level,
                            lower: e.lower,
                            upper: e.upper,
                        })
                        .collect(),
                })
                .collect(),
            collapsibility: Collapsibility {
                dcrd: point.dcrd,
                dmrd: point.dmrd,
                abs_difference: (point.dcrd - point.dmrd).abs(),
            },
        }
    }

    /// Pretty-printed JSON followed by a newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable tables, numbers to two decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let fit = &self.fit;
        let _ = writeln!(out, "Input: {} ({} cells, {} subjects)", self.input.source, self.input.records, self.input.n_total);
        let _ = writeln!(out, "Model: {} [{} link]", self.model.formula, self.model.link);
        let _ = writeln!(
            out,
            "Fit: converged={} iterations={} loglik={:.4} deviance={:.4} df={} dispersion={}",
            fit.converged,
            fit.iterations,
            fit.log_likelihood,
            fit.deviance,
            fit.residual_df,
            fit.dispersion.map_or("n/a".to_owned(), |d| format!("{d:.4}")),
        );
        out.push('\n');

        let width = self
            .model
            .terms
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max(11);
        let _ = write!(out, "{:<width$}", "Parameter");
        for t in &self.model.terms {
            let _ = write!(out, " {t:>8}");
        }
        out.push('\n');
        let _ = write!(out, "{:<width$}", "Estimate");
        for c in &fit.coefficients {
            let _ = write!(out, " {:>8.2}", c.estimate);
        }
        out.push('\n');
        for (title, m) in [
            ("Covariance (over-dispersion adjusted)", &fit.cov_robust),
            ("Covariance (inverse observed information)", &fit.cov_model),
            ("Covariance (sandwich)", &fit.cov_sandwich),
        ] {
            let _ = writeln!(out, "\n{title}");
            for (t, row) in self.model.terms.iter().zip(m) {
                let _ = write!(out, "{t:<width$}");
                for v in row {
                    let _ = write!(out, " {:>8.2}", v);
                }
                out.push('\n');
            }
        }

        let _ = writeln!(
            out,
            "\nInteraction measures ({} draws, seed {}, {} covariance)",
            self.simulation.n_draws, self.simulation.seed, self.simulation.covariance
        );
        let _ = write!(out, "{:<14} {:>8}", "Measure", "Estimate");
        for l in &self.simulation.levels {
            let _ = write!(out, " {:>20}", format!("{}% CI", l * 100.0));
        }
        out.push('\n');
        for m in &self.measures {
            let _ = write!(out, "{:<14} {:>8.2}", m.label, m.point);
            for i in &m.intervals {
                let _ = write!(out, " {:>20}", format!("({:.2}, {:.2})", i.lower, i.upper));
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\nDCRD = {:.6}, DMRD = {:.6} (|difference| = {:.1e})",
            self.collapsibility.dcrd, self.collapsibility.dmrd, self.collapsibility.abs_difference
        );
        let _ = writeln!(
            out,
            "Diagnostics: cholesky jitter {:e}, draws with clamped risks {}",
            self.simulation.cholesky_jitter, self.simulation.clamped_draws
        );
        out
    }

    /// `coefficients.csv`: one row per (matrix, term) with the estimate and
    /// the covariance row.
    pub fn coefficients_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["matrix".to_owned(), "term".to_owned(), "estimate".to_owned()];
        header.extend(self.model.terms.iter().cloned());
        w.write_record(&header)?;
        for (kind, m) in [
            ("robust", &self.fit.cov_robust),
            ("model", &self.fit.cov_model),
            ("sandwich", &self.fit.cov_sandwich),
        ] {
            for (c, row) in self.fit.coefficients.iter().zip(m) {
                let mut rec = vec![kind.to_owned(), c.term.clone(), c.estimate.to_string()];
                rec.extend(row.iter().map(f64::to_string));
                w.write_record(&rec)?;
            }
        }
        finish(w)
    }

    /// `measures.csv`: one row per (measure, level).
    pub fn measures_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["measure_id", "label", "point", "level", "lower", "upper"])?;
        for m in &self.measures {
            for i in &m.intervals {
                w.write_record([
                    m.id.to_owned(),
                    m.label.to_owned(),
                    m.point.to_string(),
                    i.level.to_string(),
                    i.lower.to_string(),
                    i.upper.to_string(),
                ])?;
            }
        }
        finish(w)
    }
}

/// `hist_<measure>.csv` contents for one measure.
pub fn histogram_csv(sorted_draws: &[f64], n_bins: usize) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bin_left", "bin_right", "count"])?;
    for b in histogram(sorted_draws, n_bins) {
        w.write_record([b.left.to_string(), b.right.to_string(), b.count.to_string()])?;
    }
    finish(w)
}

/// `draws.csv`: every simulated value in draw order.
pub fn draws_csv(outcome: &SimulationOutcome) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["measure_id", "draw_index", "value"])?;
    for (id, values) in MeasureId::ALL.iter().zip(&outcome.draws_by_index) {
        for (i, v) in values.iter().enumerate() {
            w.write_record([id.name().to_owned(), i.to_string(), v.to_string()])?;
        }
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, csv::Error> {
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
