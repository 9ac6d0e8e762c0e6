//! Maximum-likelihood fitting of a logistic model to grouped binomial counts.
//!
//! Row `i` contributes `s_i log p_i + (n_i - s_i) log(1 - p_i)` to the
//! log-likelihood with `logit(p_i) = x_i · beta`. The score is
//! `Xᵀ(s - n p)` and the observed information is `Xᵀ W X` with
//! `w_i = n_i p_i (1 - p_i)`; for the canonical link these do not depend on
//! the response beyond the score.
//!
//! Three covariance matrices are reported:
//!
//! * `cov_model`: inverse observed information.
//! * `cov_sandwich`: `A⁻¹ B A⁻¹` with the per-row scores in `B`.
//! * `cov_robust`: `cov_model` scaled by the deviance dispersion
//!   `D / (rows - terms)`, the quasi-likelihood over-dispersion
//!   adjustment. This one is the default input to the simulation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, cholesky_strict, dot, spd_inverse, Matrix};
use crate::math::{ln, logistic, logit, softplus};
use crate::model::{DesignMatrix, Link};

/// Convergence controls for [`fit_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Hard cap on Newton iterations.
    pub max_iterations: usize,
    /// Converged once the largest absolute score component is below this.
    pub score_tolerance: f64,
    /// Converged once the largest coefficient change is below this.
    pub step_tolerance: f64,
    /// Step-halving attempts per iteration.
    pub max_step_halvings: usize,
    /// Coefficients beyond this magnitude indicate separation.
    pub separation_coefficient: f64,
    /// Fitted risks within this distance of 0 or 1 indicate separation.
    pub separation_probability: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            score_tolerance: 1e-8,
            step_tolerance: 1e-10,
            max_step_halvings: 30,
            separation_coefficient: 15.0,
            separation_probability: 1e-10,
        }
    }
}

/// Output of [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Estimated coefficients, one per design column.
    pub coefficients: Vec<f64>,
    /// Column labels copied from the design.
    pub term_names: Vec<String>,
    /// Inverse observed information.
    pub cov_model: Matrix,
    /// Sandwich estimator with per-row scores.
    pub cov_sandwich: Matrix,
    /// Over-dispersion adjusted covariance, `dispersion * cov_model`.
    pub cov_robust: Matrix,
    /// Log-likelihood at the estimate.
    pub log_likelihood: f64,
    /// Deviance against the saturated (one parameter per row) model.
    pub deviance: f64,
    /// Rows minus coefficients.
    pub residual_df: usize,
    /// `deviance / residual_df`; `None` when there are no residual degrees
    /// of freedom, in which case `cov_robust` equals `cov_model`.
    pub dispersion: Option<f64>,
    /// Newton iterations performed.
    pub iterations: usize,
    /// Whether the convergence criterion was met without signs of
    /// separation.
    pub converged: bool,
    /// Largest absolute score component at the estimate.
    pub max_abs_score: f64,
    /// Coefficients diverged or fitted risks hit 0 or 1.
    pub separation_suspected: bool,
}

impl FitResult {
    /// Fitted risks for the rows of `design`.
    pub fn fitted(&self, design: &DesignMatrix) -> Vec<f64> {
        fitted_risks(&self.coefficients, design.matrix())
    }
}

fn check_inputs(design: &Matrix, successes: &[f64], totals: &[f64]) -> Result<()> {
    let n = design.rows();
    if n == 0 || design.cols() == 0 {
        return Err(Error::Input("design matrix is empty".into()));
    }
    if successes.len() != n || totals.len() != n {
        return Err(Error::Input(format!(
            "design has {n} rows but {} success and {} total counts",
            successes.len(),
            totals.len()
        )));
    }
    for (i, (&s, &t)) in successes.iter().zip(totals).enumerate() {
        if !(s >= 0.0 && s <= t && t > 0.0) {
            return Err(Error::Input(format!("row {i}: need 0 <= successes ({s}) <= totals ({t}), totals > 0")));
        }
    }
    if design.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("design matrix has non-finite entries".into()));
    }
    Ok(())
}

fn fitted_risks(coefficients: &[f64], design: &Matrix) -> Vec<f64> {
    design.row_iter().map(|r| logistic(dot(r, coefficients))).collect()
}

/// Grouped binomial log-likelihood (without the binomial coefficients).
pub fn log_likelihood(coefficients: &[f64], design: &Matrix, successes: &[f64], totals: &[f64]) -> f64 {
    design
        .row_iter()
        .zip(successes.iter().zip(totals))
        .map(|(r, (&s, &n))| {
            let eta = dot(r, coefficients);
            // log p = -softplus(-eta), log(1-p) = -softplus(eta)
            -s * softplus(-eta) - (n - s) * softplus(eta)
        })
        .sum()
}

/// Score vector `Xᵀ(s - n p)`.
pub fn score(coefficients: &[f64], design: &Matrix, successes: &[f64], totals: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; design.cols()];
    for (r, (&s, &n)) in design.row_iter().zip(successes.iter().zip(totals)) {
        let resid = s - n * logistic(dot(r, coefficients));
        for (uj, &xj) in u.iter_mut().zip(r) {
            *uj += resid * xj;
        }
    }
    u
}

/// Observed information `Xᵀ W X`, `w_i = n_i p_i (1 - p_i)`.
pub fn observed_information(coefficients: &[f64], design: &Matrix, totals: &[f64]) -> Matrix {
    let k = design.cols();
    let mut info = Matrix::zeros(k, k);
    for (r, &n) in design.row_iter().zip(totals) {
        let p = logistic(dot(r, coefficients));
        let w = n * p * (1.0 - p);
        if w == 0.0 {
            continue;
        }
        for a in 0..k {
            let wa = w * r[a];
            if wa == 0.0 {
                continue;
            }
            for b in 0..=a {
                info[(a, b)] += wa * r[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            info[(b, a)] = info[(a, b)];
        }
    }
    info
}

/// Sandwich covariance `A⁻¹ B A⁻¹` with `B = Σ U_i U_iᵀ` and per-row score
/// `U_i = (s_i - n_i p_i) x_i`.
pub fn robust_covariance(
    coefficients: &[f64],
    design: &DesignMatrix,
    successes: &[f64],
    totals: &[f64],
) -> Result<Matrix> {
    let x = design.matrix();
    check_inputs(x, successes, totals)?;
    let a_inv = spd_inverse(&observed_information(coefficients, x, totals), design.column_names())?;
    Ok(sandwich(&a_inv, coefficients, x, successes, totals))
}

fn sandwich(a_inv: &Matrix, coefficients: &[f64], x: &Matrix, successes: &[f64], totals: &[f64]) -> Matrix {
    let k = x.cols();
    let mut meat = Matrix::zeros(k, k);
    for (r, (&s, &n)) in x.row_iter().zip(successes.iter().zip(totals)) {
        let resid = s - n * logistic(dot(r, coefficients));
        for a in 0..k {
            for b in 0..k {
                meat[(a, b)] += resid * resid * r[a] * r[b];
            }
        }
    }
    a_inv.matmul(&meat).matmul(a_inv).symmetrized()
}

/// Deviance `2 Σ [s log(s / n p) + (n - s) log((n - s) / n (1 - p))]`.
pub fn deviance(coefficients: &[f64], design: &Matrix, successes: &[f64], totals: &[f64]) -> f64 {
    let mut d = 0.0;
    for (r, (&s, &n)) in design.row_iter().zip(successes.iter().zip(totals)) {
        let p = logistic(dot(r, coefficients));
        if s > 0.0 {
            d += s * ln(s / (n * p));
        }
        if n - s > 0.0 {
            d += (n - s) * ln((n - s) / (n * (1.0 - p)));
        }
    }
    2.0 * d
}

/// Over-dispersion adjusted covariance `(D / df) · A⁻¹`; `None` when the
/// design leaves no residual degrees of freedom.
pub fn dispersion_adjusted_covariance(
    coefficients: &[f64],
    design: &DesignMatrix,
    successes: &[f64],
    totals: &[f64],
) -> Result<Option<(f64, Matrix)>> {
    let x = design.matrix();
    check_inputs(x, successes, totals)?;
    let Some(df) = x.rows().checked_sub(x.cols()).filter(|&df| df > 0) else {
        return Ok(None);
    };
    let phi = deviance(coefficients, x, successes, totals) / df as f64;
    let a_inv = spd_inverse(&observed_information(coefficients, x, totals), design.column_names())?;
    Ok(Some((phi, a_inv.scaled(phi))))
}

/// Fits with default [`FitOptions`].
pub fn fit(design: &DesignMatrix, successes: &[f64], totals: &[f64], link: Link) -> Result<FitResult> {
    fit_with(design, successes, totals, link, &FitOptions::default())
}

/// Newton–Raphson with step-halving.
///
/// Errors on invalid counts and on a rank-deficient design, naming the
/// first dependent column. Non-convergence and suspected separation are not
/// errors: the result comes back with `converged == false`.
pub fn fit_with(
    design: &DesignMatrix,
    successes: &[f64],
    totals: &[f64],
    link: Link,
    options: &FitOptions,
) -> Result<FitResult> {
    let Link::Logit = link;
    let x = design.matrix();
    check_inputs(x, successes, totals)?;
    let k = x.cols();

    let gram = x.transpose().matmul(x);
    cholesky_strict(&gram, 1e-10, design.column_names())?;

    let mut beta = vec![0.0; k];
    let pooled = successes.iter().sum::<f64>() / totals.iter().sum::<f64>();
    let start = logit(pooled).clamp(-10.0, 10.0);
    if let Some(j) = (0..k).find(|&j| x.row_iter().all(|r| r[j] == 1.0)) {
        beta[j] = start;
    }

    let mut ll = log_likelihood(&beta, x, successes, totals);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        let u = score(&beta, x, successes, totals);
        if max_abs(&u) < options.score_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let info = observed_information(&beta, x, totals);
        let Ok(l) = cholesky_strict(&info, 1e-14, design.column_names()) else {
            break;
        };
        let delta = cholesky_solve(&l, &u);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_step_halvings {
            let cand: Vec<f64> = beta.iter().zip(&delta).map(|(b, d)| b + step * d).collect();
            let ll_cand = log_likelihood(&cand, x, successes, totals);
            if ll_cand >= ll - 1e-12 * ll.abs().max(1.0) {
                accepted = Some((cand, ll_cand));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, ll_cand)) = accepted else {
            break;
        };
        let change = beta
            .iter()
            .zip(&cand)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        beta = cand;
        ll = ll_cand;
        if change < options.step_tolerance {
            converged = true;
            break;
        }
    }

    let u = score(&beta, x, successes, totals);
    let p = fitted_risks(&beta, x);
    let eps = options.separation_probability;
    let separation_suspected = beta.iter().any(|b| b.abs() > options.separation_coefficient)
        || p.iter().any(|&pi| pi >= 1.0 - eps || pi <= eps);
    let converged = converged && !separation_suspected;

    let info = observed_information(&beta, x, totals);
    let nan = || Matrix::filled(k, k, f64::NAN);
    let (cov_model, cov_sandwich) = match spd_inverse(&info, design.column_names()) {
        Ok(inv) => {
            let sw = sandwich(&inv, &beta, x, successes, totals);
            (inv, sw)
        }
        Err(e) if converged => return Err(e),
        Err(_) => (nan(), nan()),
    };
    let residual_df = x.rows().saturating_sub(k);
    let dev = deviance(&beta, x, successes, totals);
    let dispersion = (residual_df > 0).then(|| dev / residual_df as f64);
    let cov_robust = match dispersion {
        Some(phi) => cov_model.scaled(phi),
        None => cov_model.clone(),
    };

    Ok(FitResult {
        coefficients: beta,
        term_names: design.column_names().to_vec(),
        cov_model,
        cov_sandwich,
        cov_robust,
        log_likelihood: ll,
        deviance: dev,
        residual_df,
        dispersion,
        iterations,
        converged,
        max_abs_score: max_abs(&u),
        separation_suspected,
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
