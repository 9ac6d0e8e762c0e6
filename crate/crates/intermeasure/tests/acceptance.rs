//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p intermeasure --test acceptance`.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use intermeasure::simulate_parallel;
use intermeasure_core::fitting::{fit, log_likelihood, observed_information, score};
use intermeasure_core::measures::{dcrd, dmrd, measures_from_table, population_risk, MeasureSet, RiskTable};
use intermeasure_core::model::{
    covariate_distribution, expand_dataset, CovariateDistribution, CovariatePattern, Link, ModelSpec, Term, Variable,
};
use intermeasure_core::simci::{CovarianceChoice, SimulationConfig};
use intermeasure_core::{fixtures, measure_set, parse_formula, FitResult, Matrix, MeasureId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const FULL_MODEL: &str = "y ~ z1 + z2 + z1:z2 + x1 + x2 + x3 + z1:x2";
const REDUCED_MODEL: &str = "y ~ z1 + z2 + z1:z2 + x1 + x2 + x3";

const PUBLISHED_ESTIMATES: [f64; 8] = [1.19, -0.87, 0.10, 2.18, -0.57, -1.82, 0.55, 1.96];
const PUBLISHED_COVARIANCE: [[f64; 8]; 8] = [
    [0.64, -0.53, -0.32, 0.29, -0.12, -0.42, -0.13, 0.47],
    [-0.53, 1.06, 0.31, -0.67, -0.14, 0.45, 0.10, -0.89],
    [-0.32, 0.31, 0.72, -0.71, 0.00, 0.05, 0.06, -0.07],
    [0.29, -0.67, -0.71, 1.86, 0.05, -0.05, -0.04, 0.32],
    [-0.12, -0.14, 0.00, 0.05, 0.37, -0.04, -0.05, 0.03],
    [-0.42, 0.45, 0.05, -0.05, -0.04, 0.69, -0.01, -0.69],
    [-0.13, 0.10, 0.06, -0.04, -0.05, -0.01, 0.39, -0.10],
    [0.47, -0.89, -0.07, 0.32, 0.03, -0.69, -0.10, 1.40],
];
const PUBLISHED_POINT_FULL: [f64; 5] = [8.85, 1.60, 8.62, 1.58, 0.34];
const PUBLISHED_POINT_REDUCED: [f64; 5] = [6.05, 1.47, 5.47, 1.41, 0.27];
/// (95% lower, 50% lower, 50% upper, 95% upper) for the first model.
const PUBLISHED_INTERVALS_FULL: [[f64; 4]; 5] = [
    [0.66, 3.61, 21.95, 127.04],
    [0.74, 1.22, 2.27, 4.60],
    [0.72, 3.50, 15.93, 88.51],
    [0.77, 1.23, 1.90, 3.40],
    [-0.10, 0.18, 0.45, 0.72],
];

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

struct Fitted {
    spec: ModelSpec,
    dist: CovariateDistribution,
    fit: FitResult,
}

fn fit_fixture(formula: &str) -> Fitted {
    let data = fixtures::nguyen2008();
    let spec = parse_formula(formula, data.covariate_names()).expect("formula");
    let g = expand_dataset(&data, &spec).expect("design");
    let fit = fit(&g.design, &g.successes, &g.totals, Link::Logit).expect("fit");
    let dist = covariate_distribution(&data).expect("distribution");
    Fitted { spec, dist, fit }
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let f = fit_fixture(FULL_MODEL);
    let elapsed = start.elapsed().as_secs_f64();
    let gap = max_gap(&f.fit.coefficients, &PUBLISHED_ESTIMATES);
    let detail = format!("max |coef - published| = {gap:.4} (tol 0.02), {:.1} ms", elapsed * 1e3);
    if f.fit.converged && gap <= 0.02 && elapsed < 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Verdict {
    let f = fit_fixture(FULL_MODEL);
    let expected: Vec<f64> = PUBLISHED_COVARIANCE.iter().flatten().copied().collect();
    let gap = max_gap(f.fit.cov_robust.as_slice(), &expected);
    let detail = format!("max |cov - published| = {gap:.4} (tol 0.05)");
    if gap <= 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Verdict {
    let mut gaps = Vec::new();
    for (formula, expected) in [(FULL_MODEL, PUBLISHED_POINT_FULL), (REDUCED_MODEL, PUBLISHED_POINT_REDUCED)] {
        let f = fit_fixture(formula);
        let m = measure_set(&f.fit.coefficients, &f.spec, &f.dist).map_err(|e| e.to_string())?;
        gaps.push(max_gap(&m.values(), &expected));
    }
    let detail = format!("max gap full model = {:.4}, reduced model = {:.4} (tol 0.02)", gaps[0], gaps[1]);
    if gaps.iter().all(|&g| g <= 0.02) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let f = fit_fixture(FULL_MODEL);
    let config = SimulationConfig::new(100_000, 2008, vec![0.5, 0.95], CovarianceChoice::Robust).map_err(|e| e.to_string())?;
    let outcome = simulate_parallel(&f.fit, &f.spec, &f.dist, &config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut worst = Vec::new();
    let mut ok = true;
    for (id, expected) in MeasureId::ALL.into_iter().zip(PUBLISHED_INTERVALS_FULL) {
        let est = outcome.get(id);
        let (l95, u95) = est.interval(0.95).ok_or("missing 95% interval")?;
        let (l50, u50) = est.interval(0.5).ok_or("missing 50% interval")?;
        let got = [l95, l50, u50, u95];
        let err = if id.is_ratio() {
            got.iter().zip(expected).map(|(g, e)| ((g - e) / e).abs()).fold(0.0, f64::max)
        } else {
            max_gap(&got, &expected)
        };
        let tol = if id.is_ratio() { 0.25 } else { 0.06 };
        ok &= err <= tol;
        worst.push(format!("{} {:.3}", id.name(), err));
    }
    ok &= elapsed < 60.0;
    let detail = format!(
        "worst endpoint error [{}] (tol 25% rel / 0.06 abs), {:.2} s",
        worst.join(", "),
        elapsed
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn all_patterns(n_cov: usize) -> Vec<CovariatePattern> {
    (0..1usize << n_cov)
        .map(|m| CovariatePattern::new((0..n_cov).map(|b| (m >> b) & 1 == 1).collect()))
        .collect()
}

fn random_distribution(rng: &mut ChaCha8Rng, patterns: Vec<CovariatePattern>) -> CovariateDistribution {
    let raw: Vec<f64> = patterns.iter().map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<(CovariatePattern, f64)> = patterns.into_iter().zip(raw.iter().map(|w| w / total)).collect();
    let drift = 1.0 - weights.iter().map(|(_, w)| w).sum::<f64>();
    weights[0].1 += drift;
    CovariateDistribution::from_weights(weights).expect("weights sum to one")
}

fn random_model(rng: &mut ChaCha8Rng, n_cov: usize) -> ModelSpec {
    let mut terms = vec![
        Term::Intercept,
        Term::Main(Variable::Z1),
        Term::Main(Variable::Z2),
        Term::Product(Variable::Z1, Variable::Z2),
    ];
    for c in 0..n_cov {
        let x = Variable::Covariate(c);
        for t in [Term::Main(x), Term::Product(Variable::Z1, x), Term::Product(Variable::Z2, x)] {
            if rng.random_bool(0.5) {
                terms.push(t);
            }
        }
        for d in c + 1..n_cov {
            if rng.random_bool(0.3) {
                terms.push(Term::Product(x, Variable::Covariate(d)));
            }
        }
    }
    let names = (0..n_cov).map(|i| format!("x{}", i + 1)).collect();
    ModelSpec::new(terms, Link::Logit, names).expect("valid model")
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n_cov = rng.random_range(1..=4);
        let spec = random_model(&mut rng, n_cov);
        let beta: Vec<f64> = (0..spec.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let dist = random_distribution(&mut rng, all_patterns(n_cov));
        let m = measure_set(&beta, &spec, &dist).map_err(|e| e.to_string())?;
        let expected = beta[spec.exposure_product_index().ok_or("no z1:z2 term")?].exp();
        worst = worst.max((m.rcor - expected).abs() / expected);
    }
    let detail = format!("50 models, max |rcor/exp(b3) - 1| = {worst:.2e} (tol 1e-12)");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_table(rng: &mut ChaCha8Rng) -> (RiskTable, CovariateDistribution) {
    let n_cov = rng.random_range(0..=3);
    let patterns = all_patterns(n_cov);
    let risks = patterns.iter().map(|_| [(); 4].map(|_| rng.random_range(0.01..0.99))).collect();
    let table = RiskTable::new(patterns.clone(), risks).expect("risks in (0,1)");
    (table, random_distribution(rng, patterns))
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (table, dist) = random_table(&mut rng);
        let conditional = dcrd(&table, &dist).map_err(|e| e.to_string())?;
        let marginal = dmrd(&population_risk(&table, &dist).map_err(|e| e.to_string())?);
        worst = worst.max((conditional - marginal).abs());
    }
    let detail = format!("1000 tables, max |dcrd - dmrd| = {worst:.2e} (tol 1e-12)");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn measure_gap(a: &MeasureSet, b: &MeasureSet) -> f64 {
    MeasureId::ALL
        .into_iter()
        .map(|id| {
            let (x, y) = (a.get(id), b.get(id));
            if id.is_ratio() {
                (x - y).abs() / x.abs()
            } else {
                (x - y).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (table, dist) = random_table(&mut rng);
        let a = measures_from_table(&table, &dist).map_err(|e| e.to_string())?;
        let b = measures_from_table(&table.with_exposures_swapped(), &dist).map_err(|e| e.to_string())?;
        worst = worst.max(measure_gap(&a, &b));
    }
    let detail = format!("1000 tables, max change after swapping z1/z2 = {worst:.2e} (tol 1e-12)");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Straight-line evaluation of the measures from named risks, in the order
/// RCOR, RCRR, RMOR, RMRR, DMRD, DCRD.
fn oracle(strata: &[(f64, [f64; 4])]) -> [f64; 6] {
    let odds = |p: f64| p / (1.0 - p);
    let (mut rcor, mut rcrr, mut dcrd) = (0.0, 0.0, 0.0);
    let (mut pr00, mut pr01, mut pr10, mut pr11) = (0.0, 0.0, 0.0, 0.0);
    for &(w, [p00, p01, p10, p11]) in strata {
        rcor += w * (odds(p11) * odds(p00)) / (odds(p01) * odds(p10));
        rcrr += w * (p11 * p00) / (p01 * p10);
        dcrd += w * (p11 - p01 - p10 + p00);
        pr00 += w * p00;
        pr01 += w * p01;
        pr10 += w * p10;
        pr11 += w * p11;
    }
    let rmor = (odds(pr11) * odds(pr00)) / (odds(pr01) * odds(pr10));
    let rmrr = (pr11 * pr00) / (pr01 * pr10);
    [rcor, rcrr, rmor, rmrr, pr11 - pr01 - pr10 + pr00, dcrd]
}

fn oracle_gap(patterns: &[CovariatePattern], dist: &CovariateDistribution, strata: &[(f64, [f64; 4])]) -> f64 {
    let table = RiskTable::new(patterns.to_vec(), strata.iter().map(|s| s.1).collect()).expect("grid risks");
    let m = measures_from_table(&table, dist).expect("measures");
    let got = [m.rcor, m.rcrr, m.rmor, m.rmrr, m.dmrd, m.dcrd];
    got.iter()
        .zip(oracle(strata))
        .map(|(g, e)| (g - e).abs() / e.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn criterion_8() -> Verdict {
    let grid: Vec<f64> = (1..=9).map(|i| f64::from(i) / 10.0).collect();
    let risks = |code: usize| -> [f64; 4] { [0, 1, 2, 3].map(|k| grid[(code / 9usize.pow(k)) % 9]) };
    let start = Instant::now();

    let one = vec![CovariatePattern::new(vec![false])];
    let one_dist = CovariateDistribution::from_weights(vec![(one[0].clone(), 1.0)]).expect("weights");
    let worst_one = (0..6561)
        .map(|c| oracle_gap(&one, &one_dist, &[(1.0, risks(c))]))
        .fold(0.0, f64::max);

    let two = all_patterns(1);
    let weights = [0.3, 0.7];
    let two_dist =
        CovariateDistribution::from_weights(two.iter().cloned().zip(weights).collect()).expect("weights");
    let worst_two = (0..6561usize)
        .into_par_iter()
        .map(|a| {
            let first = (weights[0], risks(a));
            (0..6561)
                .map(|b| oracle_gap(&two, &two_dist, &[first, (weights[1], risks(b))]))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);

    let detail = format!(
        "6561 one-stratum + 43046721 two-stratum tables, max rel gap {:.2e} / {:.2e} (tol 1e-12), {:.1} s",
        worst_one,
        worst_two,
        start.elapsed().as_secs_f64()
    );
    if worst_one <= 1e-12 && worst_two <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    max_gap(a, b) / scale
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = 1e-5;
    let (mut worst_score, mut worst_info): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let rows = rng.random_range(4..16);
        let cols = rng.random_range(2..6);
        let mut x = Matrix::zeros(rows, cols);
        for i in 0..rows {
            x[(i, 0)] = 1.0;
            for j in 1..cols {
                x[(i, j)] = f64::from(rng.random_range(0..2u8));
            }
        }
        let n: Vec<f64> = (0..rows).map(|_| f64::from(rng.random_range(1..25u32))).collect();
        let s: Vec<f64> = n.iter().map(|&t| f64::from(rng.random_range(0..=t as u32))).collect();
        let beta: Vec<f64> = (0..cols).map(|_| rng.random_range(-1.5..1.5)).collect();

        let shifted = |j: usize, d: f64| {
            let mut b = beta.clone();
            b[j] += d;
            b
        };
        let fd_score: Vec<f64> = (0..cols)
            .map(|j| (log_likelihood(&shifted(j, h), &x, &s, &n) - log_likelihood(&shifted(j, -h), &x, &s, &n)) / (2.0 * h))
            .collect();
        worst_score = worst_score.max(rel_gap(&score(&beta, &x, &s, &n), &fd_score));

        let mut fd_info = Vec::with_capacity(cols * cols);
        for a in 0..cols {
            let (up, dn) = (score(&shifted(a, h), &x, &s, &n), score(&shifted(a, -h), &x, &s, &n));
            fd_info.extend((0..cols).map(|b| -(up[b] - dn[b]) / (2.0 * h)));
        }
        worst_info = worst_info.max(rel_gap(observed_information(&beta, &x, &n).as_slice(), &fd_info));
    }
    let detail = format!("20 datasets, max rel gap score {worst_score:.2e}, information {worst_info:.2e} (tol 1e-6)");
    if worst_score <= 1e-6 && worst_info <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cli_run(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_intermeasure"))
        .args(["--fixture", "nguyen2008", "--formula", FULL_MODEL, "--draws", "5000", "--seed", "42"])
        .args(["--format", "json,csv", "--quiet", "--out"])
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("CLI exited with {status}"))
    }
}

fn criterion_10() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    cli_run(&a)?;
    cli_run(&b)?;
    let mut names: Vec<String> = std::fs::read_dir(&a)
        .map_err(|e| e.to_string())?
        .map(|e| e.expect("dir entry").file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut differing = Vec::new();
    for name in &names {
        let left = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let right = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
        if left != right {
            differing.push(name.as_str());
        }
    }
    let detail = format!("{} files compared, {} differ {:?}", names.len(), differing.len(), differing);
    if differing.is_empty() && names.iter().any(|n| n == "report.json") && names.iter().any(|n| n == "draws.csv") {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("coefficient reproduction", criterion_1),
        ("covariance reproduction", criterion_2),
        ("point-measure reproduction", criterion_3),
        ("interval agreement", criterion_4),
        ("exp(b3) identity", criterion_5),
        ("collapsibility identity", criterion_6),
        ("symmetry", criterion_7),
        ("oracle equivalence", criterion_8),
        ("gradient check", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
