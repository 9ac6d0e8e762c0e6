//! Population measures of exposure–exposure interaction on a binary outcome.
//!
//! The pipeline is: stratified counts ([`model::Dataset`]) and a regression
//! specification ([`model::ModelSpec`]) are expanded into a grouped design,
//! fitted by maximum likelihood ([`fitting::fit`]), turned into conditional
//! risks and the five interaction measures ([`measures::measure_set`]), and
//! finally given percentile intervals by redrawing the coefficients from
//! their asymptotic normal distribution ([`simci::simulate`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, reports and
//! the parallel simulation driver live in the `intermeasure` crate.
#![no_std]
#![warn(missing_docs)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod fitting;
pub mod fixtures;
pub mod formula;
pub mod linalg;
mod math;
pub mod measures;
pub mod model;
pub mod simci;

pub use error::{Error, Result};
pub use fitting::{fit, FitOptions, FitResult};
pub use formula::parse_formula;
pub use linalg::Matrix;
pub use measures::{measure_set, MeasureId, MeasureSet, RiskTable};
pub use model::{
    CovariateDistribution, CovariatePattern, Dataset, DesignMatrix, ExposurePattern, Link,
    ModelSpec, StratumRecord, Term, Variable,
};
pub use simci::{simulate, CovarianceChoice, IntervalEstimate, SimulationConfig, SimulationOutcome};
