//! Simulation-based percentile intervals for the interaction measures.
//!
//! Coefficient vectors are drawn from `N(estimate, Σ)`, each draw is pushed
//! through [`measure_set`], and percentile intervals are read off the sorted
//! draws. Draw `i` depends only on `(seed, i)`: a ChaCha8 generator keyed by
//! the seed is switched to stream `i`, so draws can be evaluated in any
//! order or in parallel and still reproduce bit for bit.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fitting::FitResult;
use crate::linalg::{cholesky_semidefinite, Matrix};
use crate::measures::{measure_set, MeasureId, MeasureSet};
use crate::model::{CovariateDistribution, ModelSpec};

/// Which covariance matrix of the fit drives the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceChoice {
    /// Over-dispersion adjusted (`FitResult::cov_robust`).
    #[default]
    Robust,
    /// Per-row sandwich (`FitResult::cov_sandwich`).
    Sandwich,
    /// Inverse observed information (`FitResult::cov_model`).
    ModelBased,
}

impl CovarianceChoice {
    /// Picks the matching matrix out of a fit.
    pub fn select(self, fit: &FitResult) -> &Matrix {
        match self {
            Self::Robust => &fit.cov_robust,
            Self::Sandwich => &fit.cov_sandwich,
            Self::ModelBased => &fit.cov_model,
        }
    }

    /// Lowercase identifier used in reports.
    pub fn name(self) -> &'static str {
        match self {
            Self::Robust => "robust",
            Self::Sandwich => "sandwich",
            Self::ModelBased => "model",
        }
    }
}

/// Simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    n_draws: usize,
    seed: u64,
    levels: Vec<f64>,
    covariance: CovarianceChoice,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_draws: 1000,
            seed: 0,
            levels: vec![0.50, 0.95],
            covariance: CovarianceChoice::Robust,
        }
    }
}

impl SimulationConfig {
    /// Validates `n_draws >= 2` and strictly increasing levels in (0, 1).
    pub fn new(n_draws: usize, seed: u64, levels: Vec<f64>, covariance: CovarianceChoice) -> Result<Self> {
        if n_draws < 2 {
            return Err(Error::Input(format!("need at least 2 draws, got {n_draws}")));
        }
        if levels.is_empty() {
            return Err(Error::Input("no confidence levels requested".to_string()));
        }
        if levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(Error::Input(format!("confidence levels must lie in (0, 1): {levels:?}")));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Input(format!("confidence levels must be strictly increasing: {levels:?}")));
        }
        Ok(Self {
            n_draws,
            seed,
            levels,
            covariance,
        })
    }

    /// Number of parameter draws.
    pub fn n_draws(&self) -> usize {
        self.n_draws
    }

    /// Random seed.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Central confidence levels, increasing.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Covariance matrix to sample with.
    pub fn covariance(&self) -> CovarianceChoice {
        self.covariance
    }
}

/// Lower-triangular factor plus the diagonal jitter that was needed.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    /// `L` with `L Lᵀ = Σ + jitter · I`.
    pub lower: Matrix,
    /// Jitter added to the diagonal; 0 when none was needed.
    pub jitter: f64,
}

/// Largest diagonal jitter [`cholesky`] will try.
pub const MAX_JITTER: f64 = 1e-6;

/// Cholesky factor of a symmetric positive semi-definite matrix. If the
/// plain factorization fails, jitter `1e-12, 1e-11, …, 1e-6` is added to the
/// diagonal until it succeeds.
pub fn cholesky(sigma: &Matrix) -> Result<CholeskyFactor> {
    if !sigma.is_symmetric(1e-10 * sigma.frobenius_norm().max(1.0)) {
        return Err(Error::Input("covariance matrix is not symmetric".to_string()));
    }
    if let Some(lower) = cholesky_semidefinite(sigma) {
        return Ok(CholeskyFactor { lower, jitter: 0.0 });
    }
    let mut jitter = 1e-12;
    while jitter <= MAX_JITTER * (1.0 + 1e-9) {
        let mut a = sigma.clone();
        for i in 0..a.rows() {
            a[(i, i)] += jitter;
        }
        if let Some(lower) = cholesky_semidefinite(&a) {
            return Ok(CholeskyFactor { lower, jitter });
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveSemiDefinite { max_jitter: MAX_JITTER })
}

/// Draws coefficient vectors from `N(mean, L Lᵀ)`.
#[derive(Debug, Clone)]
pub struct ParameterSampler {
    mean: Vec<f64>,
    factor: CholeskyFactor,
    seed: u64,
}

impl ParameterSampler {
    /// Factors the selected covariance of `fit`.
    pub fn new(fit: &FitResult, covariance: CovarianceChoice, seed: u64) -> Result<Self> {
        Self::from_parts(fit.coefficients.clone(), covariance.select(fit), seed)
    }

    /// Sampler for an explicit mean and covariance.
    pub fn from_parts(mean: Vec<f64>, covariance: &Matrix, seed: u64) -> Result<Self> {
        if covariance.rows() != mean.len() || covariance.cols() != mean.len() {
            return Err(Error::Input(format!(
                "covariance is {}x{} for {} coefficients",
                covariance.rows(),
                covariance.cols(),
                mean.len()
            )));
        }
        if covariance.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("covariance matrix has non-finite entries".to_string()));
        }
        Ok(Self {
            mean,
            factor: cholesky(covariance)?,
            seed,
        })
    }

    /// Factor used for sampling.
    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    /// Draw number `index`: `mean + L u` with `u` standard normal, generated
    /// from `(seed, index)` alone.
    pub fn draw(&self, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let u: Vec<f64> = (0..self.mean.len()).map(|_| rng.sample(StandardNormal)).collect();
        let l = &self.factor.lower;
        self.mean
            .iter()
            .enumerate()
            .map(|(i, m)| m + (0..=i).map(|k| l[(i, k)] * u[k]).sum::<f64>())
            .collect()
    }
}

/// One parameter draw for `fit` under `config`.
pub fn draw_parameters(fit: &FitResult, config: &SimulationConfig, draw_index: usize) -> Result<Vec<f64>> {
    if draw_index >= config.n_draws {
        return Err(Error::Input(format!(
            "draw index {draw_index} out of range for {} draws",
            config.n_draws
        )));
    }
    Ok(ParameterSampler::new(fit, config.covariance, config.seed)?.draw(draw_index as u64))
}

/// Percentile interval at one confidence level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelInterval {
    /// Central coverage, e.g. 0.95.
    pub level: f64,
    /// Lower endpoint.
    pub lower: f64,
    /// Upper endpoint.
    pub upper: f64,
}

/// Point estimate, simulated distribution and intervals of one measure.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalEstimate {
    /// Which measure.
    pub measure: MeasureId,
    /// Value at the fitted coefficients.
    pub point: f64,
    /// Simulated values, sorted ascending.
    pub draws: Vec<f64>,
    /// One interval per requested level, in level order.
    pub endpoints: Vec<LevelInterval>,
}

impl IntervalEstimate {
    /// Interval for `level`, if it was requested.
    pub fn interval(&self, level: f64) -> Option<(f64, f64)> {
        self.endpoints
            .iter()
            .find(|e| (e.level - level).abs() < 1e-12)
            .map(|e| (e.lower, e.upper))
    }

    /// Empirical median of the draws.
    pub fn median(&self) -> f64 {
        quantile(&self.draws, 0.5)
    }
}

/// Everything a simulation run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    /// Measures at the fitted coefficients.
    pub point: MeasureSet,
    /// Intervals in [`MeasureId::ALL`] order.
    pub intervals: Vec<IntervalEstimate>,
    /// Per-measure draws in draw-index order, [`MeasureId::ALL`] order.
    pub draws_by_index: Vec<Vec<f64>>,
    /// Cholesky jitter used.
    pub jitter: f64,
    /// Draws whose risk table needed clamping.
    pub clamped_draws: usize,
    /// Settings used.
    pub config: SimulationConfig,
}

impl SimulationOutcome {
    /// Interval estimate for one measure.
    pub fn get(&self, id: MeasureId) -> &IntervalEstimate {
        &self.intervals[id.index()]
    }
}

/// Shared state for evaluating draws. Use [`Simulator::evaluate`] for each
/// index in `0..n_draws` (in any order, on any thread) and hand the results
/// to [`Simulator::finish`] in index order.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    sampler: ParameterSampler,
    spec: &'a ModelSpec,
    dist: &'a CovariateDistribution,
    config: SimulationConfig,
    point: MeasureSet,
}

impl<'a> Simulator<'a> {
    /// Requires a converged fit.
    pub fn new(
        fit: &FitResult,
        spec: &'a ModelSpec,
        dist: &'a CovariateDistribution,
        config: SimulationConfig,
    ) -> Result<Self> {
        if !fit.converged {
            return Err(Error::NotConverged(format!(
                "refusing to simulate from a fit that stopped after {} iterations (max |score| = {:e})",
                fit.iterations, fit.max_abs_score
            )));
        }
        let sampler = ParameterSampler::new(fit, config.covariance, config.seed)?;
        let point = measure_set(&fit.coefficients, spec, dist)?;
        Ok(Self {
            sampler,
            spec,
            dist,
            config,
            point,
        })
    }

    /// Number of draws to evaluate.
    pub fn n_draws(&self) -> usize {
        self.config.n_draws
    }

    /// Measures for draw `index`.
    pub fn evaluate(&self, index: usize) -> Result<MeasureSet> {
        measure_set(&self.sampler.draw(index as u64), self.spec, self.dist)
    }

    /// Sorts, extracts intervals and collects diagnostics. `draws[i]` must
    /// be the result of `evaluate(i)`.
    pub fn finish(self, draws: Vec<MeasureSet>) -> Result<SimulationOutcome> {
        if draws.len() != self.config.n_draws {
            return Err(Error::Input(format!(
                "expected {} evaluated draws, got {}",
                self.config.n_draws,
                draws.len()
            )));
        }
        let clamped_draws = draws.iter().filter(|m| m.clamped_risks > 0).count();
        let draws_by_index: Vec<Vec<f64>> = MeasureId::ALL
            .iter()
            .map(|&id| draws.iter().map(|m| m.get(id)).collect())
            .collect();
        let mut intervals = Vec::with_capacity(MeasureId::ALL.len());
        for (&id, values) in MeasureId::ALL.iter().zip(&draws_by_index) {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let endpoints = self
                .config
                .levels
                .iter()
                .map(|&level| {
                    percentile_interval(&sorted, level).map(|(lower, upper)| LevelInterval { level, lower, upper })
                })
                .collect::<Result<Vec<_>>>()?;
            intervals.push(IntervalEstimate {
                measure: id,
                point: self.point.get(id),
                draws: sorted,
                endpoints,
            });
        }
        Ok(SimulationOutcome {
            point: self.point,
            intervals,
            draws_by_index,
            jitter: self.sampler.factor.jitter,
            clamped_draws,
            config: self.config,
        })
    }
}

/// Serial simulation of all five measures from one shared draw stream.
pub fn simulate(
    fit: &FitResult,
    spec: &ModelSpec,
    dist: &CovariateDistribution,
    config: &SimulationConfig,
) -> Result<SimulationOutcome> {
    let sim = Simulator::new(fit, spec, dist, config.clone())?;
    let draws = (0..sim.n_draws())
        .map(|i| sim.evaluate(i))
        .collect::<Result<Vec<_>>>()?;
    sim.finish(draws)
}

/// Empirical quantile with linear interpolation between order statistics
/// at position `h = (n - 1) p`. `sorted` must be non-empty and ascending.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = libm::ceil(h) as usize;
    let (a, b) = (sorted[lo], sorted[hi.min(sorted.len() - 1)]);
    if lo == hi || a == b {
        a
    } else {
        a + (h - lo as f64) * (b - a)
    }
}

/// Equal-tailed percentile interval: quantiles at `(1 - level) / 2` and
/// `(1 + level) / 2`.
pub fn percentile_interval(sorted: &[f64], level: f64) -> Result<(f64, f64)> {
    if sorted.len() < 2 {
        return Err(Error::Input(format!("need at least 2 draws, got {}", sorted.len())));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Input(format!("confidence level {level} outside (0, 1)")));
    }
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]), "draws must be sorted");
    Ok((quantile(sorted, (1.0 - level) / 2.0), quantile(sorted, (1.0 + level) / 2.0)))
}

/// One histogram bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    /// Left edge (inclusive).
    pub left: f64,
    /// Right edge (exclusive, except for the last bin).
    pub right: f64,
    /// Draws in the bin.
    pub count: usize,
}

/// Minimum bin span used when every draw is identical.
pub const DEGENERATE_WIDTH: f64 = 1e-12;

/// Equal-width histogram over `[min, max]` of sorted draws. Bins are
/// left-closed; the last is closed on both sides. A zero range is widened
/// to [`DEGENERATE_WIDTH`].
pub fn histogram(sorted: &[f64], n_bins: usize) -> Vec<HistogramBin> {
    let n_bins = n_bins.max(1);
    let Some((&min, &max)) = sorted.first().zip(sorted.last()) else {
        return Vec::new();
    };
    let span = if max > min { max - min } else { DEGENERATE_WIDTH };
    let width = span / n_bins as f64;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            left: min + i as f64 * width,
            right: if i + 1 == n_bins { min + span } else { min + (i + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for &v in sorted {
        let mut i = (((v - min) / width) as usize).min(n_bins - 1);
        // guard against rounding at bin edges
        while i > 0 && v < bins[i].left {
            i -= 1;
        }
        while i + 1 < n_bins && v >= bins[i + 1].left {
            i += 1;
        }
        bins[i].count += 1;
    }
    bins
}
