//! Stratified count data, regression terms, and their expansion into a
//! grouped design matrix.
//!
//! Every variable is a binary indicator. A record is one cell of the
//! covariate-by-exposure cross table: how many of `totals` subjects with the
//! given covariate and exposure pattern had the outcome.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::logistic;

/// Values of the two exposures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExposurePattern {
    /// First exposure indicator.
    pub z1: bool,
    /// Second exposure indicator.
    pub z2: bool,
}

impl ExposurePattern {
    /// Both exposures absent.
    pub const NONE: Self = Self::new(false, false);
    /// Only the second exposure present.
    pub const SECOND_ONLY: Self = Self::new(false, true);
    /// Only the first exposure present.
    pub const FIRST_ONLY: Self = Self::new(true, false);
    /// Both exposures present.
    pub const BOTH: Self = Self::new(true, true);
    /// All four patterns in the order (0,0), (0,1), (1,0), (1,1).
    pub const ALL: [Self; 4] = [Self::NONE, Self::SECOND_ONLY, Self::FIRST_ONLY, Self::BOTH];

    /// Builds a pattern from two indicators.
    pub const fn new(z1: bool, z2: bool) -> Self {
        Self { z1, z2 }
    }

    /// Position of this pattern in [`ExposurePattern::ALL`].
    pub const fn index(self) -> usize {
        (self.z1 as usize) * 2 + self.z2 as usize
    }

    /// The pattern with the roles of the two exposures exchanged.
    pub const fn swapped(self) -> Self {
        Self::new(self.z2, self.z1)
    }
}

impl fmt::Display for ExposurePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.z1 as u8, self.z2 as u8)
    }
}

/// Ordered vector of binary covariate values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CovariatePattern(Vec<bool>);

impl CovariatePattern {
    /// Wraps a vector of indicators.
    pub fn new(values: Vec<bool>) -> Self {
        Self(values)
    }

    /// Builds a pattern from 0/1 integers; anything else is an input error.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Input(format!("covariate value {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    /// Indicator values.
    pub fn values(&self) -> &[bool] {
        &self.0
    }

    /// Number of covariates.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when there are no covariates.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Values as 0/1 integers.
    pub fn bits(&self) -> Vec<u8> {
        self.0.iter().map(|&b| b as u8).collect()
    }
}

impl fmt::Display for CovariatePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, &v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", v as u8)?;
        }
        f.write_str(")")
    }
}

/// One covariate-by-exposure cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratumRecord {
    /// Covariate values of the cell.
    pub covariates: CovariatePattern,
    /// Exposure values of the cell.
    pub exposures: ExposurePattern,
    /// Subjects with outcome 1.
    pub successes: u64,
    /// Subjects in the cell; at least 1.
    pub totals: u64,
}

impl StratumRecord {
    /// Checks `0 <= successes <= totals` and `totals >= 1`.
    pub fn new(
        covariates: CovariatePattern,
        exposures: ExposurePattern,
        successes: u64,
        totals: u64,
    ) -> Result<Self> {
        if totals == 0 {
            return Err(Error::Input(format!(
                "cell x={covariates} z={exposures} has zero total; omit empty cells instead"
            )));
        }
        if successes > totals {
            return Err(Error::Input(format!(
                "cell x={covariates} z={exposures} has {successes} successes out of {totals}"
            )));
        }
        Ok(Self {
            covariates,
            exposures,
            successes,
            totals,
        })
    }
}

/// Validated collection of stratum records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    covariate_names: Vec<String>,
    records: Vec<StratumRecord>,
    n_total: u64,
}

impl Dataset {
    /// Validates that every record has one value per covariate name, that
    /// no (covariates, exposures) key repeats, and that names are unique
    /// and distinct from `z1`/`z2`.
    pub fn new(covariate_names: Vec<String>, records: Vec<StratumRecord>) -> Result<Self> {
        for (i, name) in covariate_names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Input(format!("covariate {i} has an empty name")));
            }
            if name == "z1" || name == "z2" {
                return Err(Error::Input(format!("covariate name {name:?} is reserved for exposures")));
            }
            if covariate_names[..i].contains(name) {
                return Err(Error::Input(format!("covariate name {name:?} appears twice")));
            }
        }
        let mut seen = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if r.covariates.len() != covariate_names.len() {
                return Err(Error::Input(format!(
                    "record {i} has {} covariates, expected {}",
                    r.covariates.len(),
                    covariate_names.len()
                )));
            }
            if let Some(prev) = seen.insert((r.covariates.clone(), r.exposures), i) {
                return Err(Error::Input(format!(
                    "records {prev} and {i} share the key x={} z={}",
                    r.covariates, r.exposures
                )));
            }
        }
        let n_total = records.iter().map(|r| r.totals).sum();
        Ok(Self {
            covariate_names,
            records,
            n_total,
        })
    }

    /// Covariate labels in column order.
    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Records in input order.
    pub fn records(&self) -> &[StratumRecord] {
        &self.records
    }

    /// Total number of subjects.
    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    /// Number of records (cells).
    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// True when there are no records.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A regression variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    /// First exposure.
    Z1,
    /// Second exposure.
    Z2,
    /// Covariate by position.
    Covariate(usize),
}

impl Variable {
    fn value(self, exposures: ExposurePattern, covariates: &[bool]) -> Result<f64> {
        let v = match self {
            Variable::Z1 => exposures.z1,
            Variable::Z2 => exposures.z2,
            Variable::Covariate(i) => *covariates.get(i).ok_or_else(|| {
                Error::Specification(format!(
                    "term refers to covariate {i} but only {} are available",
                    covariates.len()
                ))
            })?,
        };
        Ok(if v { 1.0 } else { 0.0 })
    }

    fn involves_exposure(self) -> bool {
        matches!(self, Variable::Z1 | Variable::Z2)
    }
}

/// One column of the linear predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// Constant 1.
    Intercept,
    /// A single variable.
    Main(Variable),
    /// Product of two distinct variables, stored in ascending order.
    Product(Variable, Variable),
}

impl Term {
    /// Product term; the pair is unordered and must be distinct.
    pub fn product(a: Variable, b: Variable) -> Result<Self> {
        match a.cmp(&b) {
            core::cmp::Ordering::Less => Ok(Term::Product(a, b)),
            core::cmp::Ordering::Greater => Ok(Term::Product(b, a)),
            core::cmp::Ordering::Equal => Err(Error::Specification(
                "a product term needs two distinct variables".to_string(),
            )),
        }
    }

    fn variables(self) -> impl Iterator<Item = Variable> {
        let (a, b) = match self {
            Term::Intercept => (None, None),
            Term::Main(v) => (Some(v), None),
            Term::Product(a, b) => (Some(a), Some(b)),
        };
        a.into_iter().chain(b)
    }

    /// Whether the term contains `var`.
    pub fn references(self, var: Variable) -> bool {
        self.variables().any(|v| v == var)
    }

    fn value(self, exposures: ExposurePattern, covariates: &[bool]) -> Result<f64> {
        match self {
            Term::Intercept => Ok(1.0),
            Term::Main(v) => v.value(exposures, covariates),
            Term::Product(a, b) => Ok(a.value(exposures, covariates)? * b.value(exposures, covariates)?),
        }
    }
}

/// Link function between the linear predictor and the conditional risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Link {
    /// log(p / (1 - p)).
    #[default]
    Logit,
}

impl Link {
    /// Maps a linear predictor to a probability.
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            Link::Logit => logistic(eta),
        }
    }

    /// Lowercase identifier.
    pub fn name(self) -> &'static str {
        match self {
            Link::Logit => "logit",
        }
    }
}

/// Ordered regression terms plus a link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    terms: Vec<Term>,
    link: Link,
    covariate_names: Vec<String>,
}

impl ModelSpec {
    /// Validates: exactly one intercept, no duplicate terms, every covariate
    /// index below `covariate_names.len()`.
    pub fn new(terms: Vec<Term>, link: Link, covariate_names: Vec<String>) -> Result<Self> {
        let intercepts = terms.iter().filter(|t| **t == Term::Intercept).count();
        if intercepts != 1 {
            return Err(Error::Specification(format!(
                "a model needs exactly one intercept, found {intercepts}"
            )));
        }
        for (i, t) in terms.iter().enumerate() {
            if let Term::Product(a, b) = t {
                if a >= b {
                    return Err(Error::Specification(
                        "product terms must pair two distinct variables".to_string(),
                    ));
                }
            }
            if terms[..i].contains(t) {
                return Err(Error::Specification(format!(
                    "duplicate term {}",
                    term_label(*t, &covariate_names)
                )));
            }
            for v in t.variables() {
                if let Variable::Covariate(k) = v {
                    if k >= covariate_names.len() {
                        return Err(Error::Specification(format!(
                            "term refers to covariate {k} but the data has {}",
                            covariate_names.len()
                        )));
                    }
                }
            }
        }
        Ok(Self {
            terms,
            link,
            covariate_names,
        })
    }

    /// Terms in column order.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Number of coefficients.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Never true for a valid spec; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Link function.
    pub fn link(&self) -> Link {
        self.link
    }

    /// Covariate labels the spec was validated against.
    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Human-readable label of term `i`, e.g. `"(Intercept)"` or `"z1:x2"`.
    pub fn term_label(&self, i: usize) -> String {
        term_label(self.terms[i], &self.covariate_names)
    }

    /// Labels of all terms.
    pub fn term_labels(&self) -> Vec<String> {
        (0..self.terms.len()).map(|i| self.term_label(i)).collect()
    }

    /// Index of the `z1:z2` product term, if present.
    pub fn exposure_product_index(&self) -> Option<usize> {
        self.terms
            .iter()
            .position(|t| *t == Term::Product(Variable::Z1, Variable::Z2))
    }

    /// Whether some product term pairs an exposure with a covariate.
    pub fn has_exposure_covariate_product(&self) -> bool {
        self.terms.iter().any(|t| match t {
            Term::Product(a, b) => a.involves_exposure() != b.involves_exposure(),
            _ => false,
        })
    }

    /// Conditional risk for one cell under the given coefficients.
    pub fn risk(
        &self,
        coefficients: &[f64],
        exposures: ExposurePattern,
        covariates: &CovariatePattern,
    ) -> Result<f64> {
        let row = build_design_row(exposures, covariates, self)?;
        Ok(self.link.inverse(crate::linalg::dot(&row, coefficients)))
    }
}

/// Label of a variable given the covariate names.
pub fn variable_label(v: Variable, covariate_names: &[String]) -> String {
    match v {
        Variable::Z1 => "z1".to_string(),
        Variable::Z2 => "z2".to_string(),
        Variable::Covariate(i) => covariate_names
            .get(i)
            .cloned()
            .unwrap_or_else(|| format!("x{}", i + 1)),
    }
}

fn term_label(t: Term, names: &[String]) -> String {
    match t {
        Term::Intercept => "(Intercept)".to_string(),
        Term::Main(v) => variable_label(v, names),
        Term::Product(a, b) => format!("{}:{}", variable_label(a, names), variable_label(b, names)),
    }
}

/// Design row for one cell, ordered like `spec.terms()`.
pub fn build_design_row(
    exposures: ExposurePattern,
    covariates: &CovariatePattern,
    spec: &ModelSpec,
) -> Result<alloc::vec::Vec<f64>> {
    spec.terms
        .iter()
        .map(|t| t.value(exposures, covariates.values()))
        .collect()
}

/// Design matrix with one label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    matrix: Matrix,
    column_names: Vec<String>,
}

impl DesignMatrix {
    /// Pairs a matrix with its column labels.
    pub fn new(matrix: Matrix, column_names: Vec<String>) -> Result<Self> {
        if column_names.len() != matrix.cols() {
            return Err(Error::Input(format!(
                "{} column names for {} columns",
                column_names.len(),
                matrix.cols()
            )));
        }
        Ok(Self {
            matrix,
            column_names,
        })
    }

    /// Labels columns `c0`, `c1`, ….
    pub fn unnamed(matrix: Matrix) -> Self {
        let column_names = (0..matrix.cols()).map(|j| format!("c{j}")).collect();
        Self {
            matrix,
            column_names,
        }
    }

    /// Underlying matrix.
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Column labels.
    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }
}

/// Design plus response counts, one row per record.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedData {
    /// Design matrix.
    pub design: DesignMatrix,
    /// Outcome counts per row.
    pub successes: Vec<f64>,
    /// Subjects per row.
    pub totals: Vec<f64>,
}

/// Expands every record into a design row, keeping dataset order.
pub fn expand_dataset(data: &Dataset, spec: &ModelSpec) -> Result<GroupedData> {
    if data.is_empty() {
        return Err(Error::Input("dataset has no records".to_string()));
    }
    if spec.covariate_names.len() != data.covariate_names.len() {
        return Err(Error::Specification(format!(
            "model was built for {} covariates, data has {}",
            spec.covariate_names.len(),
            data.covariate_names.len()
        )));
    }
    let cols = spec.len();
    let mut buf = Vec::with_capacity(data.len() * cols);
    for r in &data.records {
        buf.extend(build_design_row(r.exposures, &r.covariates, spec)?);
    }
    let design = DesignMatrix::new(Matrix::from_vec(data.len(), cols, buf), spec.term_labels())?;
    Ok(GroupedData {
        design,
        successes: data.records.iter().map(|r| r.successes as f64).collect(),
        totals: data.records.iter().map(|r| r.totals as f64).collect(),
    })
}

/// Empirical distribution of covariate patterns, sorted by pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateDistribution {
    entries: Vec<(CovariatePattern, f64)>,
}

impl CovariateDistribution {
    /// Builds a distribution from explicit weights. Weights must be
    /// non-negative, patterns distinct and of equal length, and the total
    /// within 1e-12 of 1.
    pub fn from_weights(weights: Vec<(CovariatePattern, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let width = weights.first().map(|(p, _)| p.len());
        for (p, w) in weights {
            if Some(p.len()) != width {
                return Err(Error::Input("covariate patterns differ in length".to_string()));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Input(format!("weight {w} for pattern {p} is not a probability")));
            }
            if map.insert(p.clone(), w).is_some() {
                return Err(Error::Input(format!("pattern {p} listed twice")));
            }
        }
        if map.is_empty() {
            return Err(Error::Input("covariate distribution is empty".to_string()));
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            entries: map.into_iter().collect(),
        })
    }

    /// `(pattern, weight)` pairs sorted by pattern.
    pub fn entries(&self) -> &[(CovariatePattern, f64)] {
        &self.entries
    }

    /// Weight of a pattern, if it occurs.
    pub fn weight(&self, pattern: &CovariatePattern) -> Option<f64> {
        self.position(pattern).map(|i| self.entries[i].1)
    }

    /// Position of a pattern in [`entries`](Self::entries).
    pub fn position(&self, pattern: &CovariatePattern) -> Option<usize> {
        self.entries.binary_search_by(|(p, _)| p.cmp(pattern)).ok()
    }

    /// Number of distinct patterns.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Always false for a constructed distribution.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sample proportion of each covariate pattern, pooling over exposures.
pub fn covariate_distribution(data: &Dataset) -> Result<CovariateDistribution> {
    if data.is_empty() {
        return Err(Error::Input("dataset has no records".to_string()));
    }
    let mut counts: BTreeMap<&CovariatePattern, u64> = BTreeMap::new();
    for r in &data.records {
        *counts.entry(&r.covariates).or_default() += r.totals;
    }
    let n = data.n_total as f64;
    let entries: Vec<_> = counts
        .into_iter()
        .map(|(p, c)| (p.clone(), c as f64 / n))
        .collect();
    Ok(CovariateDistribution { entries })
}
