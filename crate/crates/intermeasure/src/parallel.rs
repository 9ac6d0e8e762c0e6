use intermeasure_core::measures::MeasureSet;
use intermeasure_core::model::{CovariateDistribution, ModelSpec};
use intermeasure_core::simci::{SimulationConfig, SimulationOutcome, Simulator};
use intermeasure_core::{FitResult, Result};
use rayon::prelude::*;

/// Same contract as [`intermeasure_core::simulate`], with draws evaluated on
/// the rayon pool. Output is bit-identical to the serial version because
/// every draw is a function of `(seed, index)` only.
pub fn simulate_parallel(
    fit: &FitResult,
    spec: &ModelSpec,
    dist: &CovariateDistribution,
    config: &SimulationConfig,
) -> Result<SimulationOutcome> {
    let sim = Simulator::new(fit, spec, dist, config.clone())?;
    let draws = (0..sim.n_draws())
        .into_par_iter()
        .map(|i| sim.evaluate(i))
        .collect::<Result<Vec<MeasureSet>>>()?;
    sim.finish(draws)
}
