//! Interaction measures computed from conditional risks.
//!
//! Write `p(z; x)` for the conditional risk under exposure `z` in covariate
//! stratum `x`, `w(x)` for the stratum weight and `o = p / (1 - p)` for odds.
//!
//! Conditional measures average per-stratum quantities over `w`:
//!
//! * RCOR = Σ w(x) · [o(1,1;x) / o(0,1;x)] / [o(1,0;x) / o(0,0;x)]
//! * RCRR = the same with risks in place of odds
//! * DCRD = Σ w(x) · [(p(1,1;x) − p(0,1;x)) − (p(1,0;x) − p(0,0;x))]
//!
//! Marginal measures are built from the population-adjusted risks
//! `PR(z) = Σ w(x) p(z; x)`:
//!
//! * RMOR = [PR(1,1) odds / PR(0,1) odds] / [PR(1,0) odds / PR(0,0) odds]
//! * RMRR = [PR(1,1) / PR(0,1)] / [PR(1,0) / PR(0,0)]
//! * DMRD = PR(1,1) − PR(0,1) − PR(1,0) + PR(0,0)
//!
//! DCRD and DMRD agree identically because the weighted sum is linear. The
//! ratio measures are not collapsible.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::model::{CovariateDistribution, CovariatePattern, ExposurePattern, ModelSpec};

/// Risks are clamped into `[RISK_FLOOR, 1 - RISK_FLOOR]` before any odds are
/// formed.
pub const RISK_FLOOR: f64 = 1e-12;

/// Conditional risks for every exposure pattern in every covariate stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    patterns: Vec<CovariatePattern>,
    risks: Vec<[f64; 4]>,
    clamped: usize,
}

impl RiskTable {
    /// Builds a table from per-stratum risks indexed by
    /// [`ExposurePattern::index`]. Values outside the clamp range are pulled
    /// in and counted; non-finite values are rejected.
    pub fn new(patterns: Vec<CovariatePattern>, risks: Vec<[f64; 4]>) -> Result<Self> {
        if patterns.len() != risks.len() {
            return Err(Error::Input(format!(
                "{} patterns but {} risk rows",
                patterns.len(),
                risks.len()
            )));
        }
        let mut clamped = 0;
        let mut risks = risks;
        for row in &mut risks {
            for p in row.iter_mut() {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::Input(format!("risk {p} is not a probability")));
                }
                let c = p.clamp(RISK_FLOOR, 1.0 - RISK_FLOOR);
                if c != *p {
                    clamped += 1;
                    *p = c;
                }
            }
        }
        Ok(Self {
            patterns,
            risks,
            clamped,
        })
    }

    /// Covariate strata in row order.
    pub fn patterns(&self) -> &[CovariatePattern] {
        &self.patterns
    }

    /// Risk for exposure `z` in stratum row `stratum`.
    pub fn risk(&self, z: ExposurePattern, stratum: usize) -> f64 {
        self.risks[stratum][z.index()]
    }

    /// All four risks of one stratum row.
    pub fn stratum(&self, stratum: usize) -> [f64; 4] {
        self.risks[stratum]
    }

    /// Number of entries that had to be clamped.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    /// The table with `z1` and `z2` exchanged.
    pub fn with_exposures_swapped(&self) -> Self {
        self.remapped(ExposurePattern::swapped)
    }

    /// The table with the two levels of `z1` relabeled.
    pub fn with_first_exposure_flipped(&self) -> Self {
        self.remapped(|z| ExposurePattern::new(!z.z1, z.z2))
    }

    fn remapped(&self, f: impl Fn(ExposurePattern) -> ExposurePattern) -> Self {
        let risks = self
            .risks
            .iter()
            .map(|row| ExposurePattern::ALL.map(|z| row[f(z).index()]))
            .collect();
        Self {
            patterns: self.patterns.clone(),
            risks,
            clamped: self.clamped,
        }
    }

    /// Pairs each row with its weight in `dist`.
    fn weighted_rows<'a>(
        &'a self,
        dist: &'a CovariateDistribution,
    ) -> Result<impl Iterator<Item = (f64, [f64; 4])> + 'a> {
        let mut pairs = Vec::with_capacity(dist.len());
        for (pattern, w) in dist.entries() {
            let row = self
                .patterns
                .iter()
                .position(|p| p == pattern)
                .ok_or_else(|| Error::Input(format!("risk table has no stratum {pattern}")))?;
            pairs.push((*w, self.risks[row]));
        }
        Ok(pairs.into_iter())
    }
}

/// Conditional risks implied by `coefficients` for every stratum of `dist`.
pub fn risk_table(coefficients: &[f64], spec: &ModelSpec, dist: &CovariateDistribution) -> Result<RiskTable> {
    if coefficients.len() != spec.len() {
        return Err(Error::Input(format!(
            "{} coefficients for {} terms",
            coefficients.len(),
            spec.len()
        )));
    }
    let mut patterns = Vec::with_capacity(dist.len());
    let mut risks = Vec::with_capacity(dist.len());
    for (pattern, _) in dist.entries() {
        let mut row = [0.0; 4];
        for z in ExposurePattern::ALL {
            row[z.index()] = spec.risk(coefficients, z, pattern)?;
        }
        patterns.push(pattern.clone());
        risks.push(row);
    }
    RiskTable::new(patterns, risks)
}

const NONE: usize = ExposurePattern::NONE.index();
const SECOND: usize = ExposurePattern::SECOND_ONLY.index();
const FIRST: usize = ExposurePattern::FIRST_ONLY.index();
const BOTH: usize = ExposurePattern::BOTH.index();

#[inline]
fn odds(p: f64) -> f64 {
    p / (1.0 - p)
}

#[inline]
fn ratio_of_ratios(v: &[f64; 4]) -> f64 {
    (v[BOTH] / v[SECOND]) / (v[FIRST] / v[NONE])
}

#[inline]
fn difference_of_differences(v: &[f64; 4]) -> f64 {
    (v[BOTH] - v[SECOND]) - (v[FIRST] - v[NONE])
}

/// Weighted mean of the per-stratum ratio of conditional odds ratios.
pub fn rcor(table: &RiskTable, dist: &CovariateDistribution) -> Result<f64> {
    Ok(table
        .weighted_rows(dist)?
        .map(|(w, r)| w * ratio_of_ratios(&r.map(odds)))
        .sum())
}

/// Weighted mean of the per-stratum ratio of conditional risk ratios.
pub fn rcrr(table: &RiskTable, dist: &CovariateDistribution) -> Result<f64> {
    Ok(table
        .weighted_rows(dist)?
        .map(|(w, r)| w * ratio_of_ratios(&r))
        .sum())
}

/// Weighted mean of the per-stratum difference of conditional risk
/// differences.
pub fn dcrd(table: &RiskTable, dist: &CovariateDistribution) -> Result<f64> {
    Ok(table
        .weighted_rows(dist)?
        .map(|(w, r)| w * difference_of_differences(&r))
        .sum())
}

/// Population-adjusted risks `PR(z)` for the four exposure patterns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationRisks(pub [f64; 4]);

impl PopulationRisks {
    /// `PR(z)`.
    pub fn get(&self, z: ExposurePattern) -> f64 {
        self.0[z.index()]
    }
}

/// `PR(z) = Σ w(x) p(z; x)`.
pub fn population_risk(table: &RiskTable, dist: &CovariateDistribution) -> Result<PopulationRisks> {
    let mut pr = [0.0; 4];
    for (w, row) in table.weighted_rows(dist)? {
        for (acc, p) in pr.iter_mut().zip(row) {
            *acc += w * p;
        }
    }
    Ok(PopulationRisks(pr))
}

/// Ratio of marginal odds ratios.
pub fn rmor(pr: &PopulationRisks) -> f64 {
    ratio_of_ratios(&pr.0.map(odds))
}

/// Ratio of marginal risk ratios.
pub fn rmrr(pr: &PopulationRisks) -> f64 {
    ratio_of_ratios(&pr.0)
}

/// Difference of marginal risk differences.
pub fn dmrd(pr: &PopulationRisks) -> f64 {
    difference_of_differences(&pr.0)
}

/// Identifier of one of the five reported measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeasureId {
    /// Ratio of conditional odds ratios.
    Rcor,
    /// Ratio of conditional risk ratios.
    Rcrr,
    /// Ratio of marginal odds ratios.
    Rmor,
    /// Ratio of marginal risk ratios.
    Rmrr,
    /// Difference of marginal risk differences (equal to DCRD).
    Dmrd,
}

impl MeasureId {
    /// Reporting order.
    pub const ALL: [MeasureId; 5] = [Self::Rcor, Self::Rcrr, Self::Rmor, Self::Rmrr, Self::Dmrd];

    /// Upper-case short name, e.g. `"RCOR"`.
    pub fn name(self) -> &'static str {
        match self {
            Self::Rcor => "RCOR",
            Self::Rcrr => "RCRR",
            Self::Rmor => "RMOR",
            Self::Rmrr => "RMRR",
            Self::Dmrd => "DMRD",
        }
    }

    /// Whether the measure is a ratio (null value 1) rather than a
    /// difference (null value 0).
    pub fn is_ratio(self) -> bool {
        !matches!(self, Self::Dmrd)
    }

    /// Position in [`MeasureId::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MeasureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The five interaction measures from one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSet {
    /// Ratio of conditional odds ratios.
    pub rcor: f64,
    /// Ratio of conditional risk ratios.
    pub rcrr: f64,
    /// Ratio of marginal odds ratios.
    pub rmor: f64,
    /// Ratio of marginal risk ratios.
    pub rmrr: f64,
    /// Difference of marginal risk differences.
    pub dmrd: f64,
    /// Difference of conditional risk differences, kept alongside DMRD so
    /// callers can check collapsibility.
    pub dcrd: f64,
    /// `PR(z)` for the four exposure patterns.
    pub population_risks: PopulationRisks,
    /// Risk-table entries that were clamped.
    pub clamped_risks: usize,
}

impl MeasureSet {
    /// Value of one measure.
    pub fn get(&self, id: MeasureId) -> f64 {
        match id {
            MeasureId::Rcor => self.rcor,
            MeasureId::Rcrr => self.rcrr,
            MeasureId::Rmor => self.rmor,
            MeasureId::Rmrr => self.rmrr,
            MeasureId::Dmrd => self.dmrd,
        }
    }

    /// The five measures in [`MeasureId::ALL`] order.
    pub fn values(&self) -> [f64; 5] {
        MeasureId::ALL.map(|id| self.get(id))
    }
}

/// All measures from an existing risk table.
pub fn measures_from_table(table: &RiskTable, dist: &CovariateDistribution) -> Result<MeasureSet> {
    let pr = population_risk(table, dist)?;
    Ok(MeasureSet {
        rcor: rcor(table, dist)?,
        rcrr: rcrr(table, dist)?,
        rmor: rmor(&pr),
        rmrr: rmrr(&pr),
        dmrd: dmrd(&pr),
        dcrd: dcrd(table, dist)?,
        population_risks: pr,
        clamped_risks: table.clamped(),
    })
}

/// Risk table, then conditional and marginal measures, from coefficients.
pub fn measure_set(coefficients: &[f64], spec: &ModelSpec, dist: &CovariateDistribution) -> Result<MeasureSet> {
    measures_from_table(&risk_table(coefficients, spec, dist)?, dist)
}
