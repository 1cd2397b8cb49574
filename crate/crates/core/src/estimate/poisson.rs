use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

use super::binary::{solve_spd, SolverOptions};

/// `P(Y <= y)` for `Y ~ Poisson(lambda)`; `y` is truncated to an integer.
///
/// Summed in log space for `y <= 10 * lambda + 50`; beyond that the tail is
/// evaluated through the regularized upper incomplete gamma function
/// `Q(y + 1, lambda)`.
pub fn poisson_cdf(lambda: f64, y: f64) -> f64 {
    if y < 0.0 {
        return 0.0;
    }
    let y = y.floor();
    if lambda <= 0.0 {
        return 1.0;
    }
    if y > 10.0 * lambda + 50.0 {
        return gamma_ur(y + 1.0, lambda);
    }
    let ln_lambda = lambda.ln();
    let log_terms: Vec<f64> = (0..=y as u64)
        .map(|k| {
            let k = k as f64;
            k * ln_lambda - lambda - ln_gamma(k + 1.0)
        })
        .collect();
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_terms.iter().map(|t| (t - max).exp()).sum();
    (max + sum.ln()).exp().min(1.0)
}

/// `P(Y > y)` for `Y ~ Poisson(lambda)`, accurate when the CDF is close to 1.
pub(crate) fn poisson_ccdf(lambda: f64, y: f64) -> f64 {
    if y < 0.0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    let c = poisson_cdf(lambda, y);
    if c < 0.5 {
        1.0 - c
    } else {
        gamma_lr(y.floor() + 1.0, lambda)
    }
}

pub fn poisson_pmf(lambda: f64, y: f64) -> f64 {
    if y < 0.0 || y.fract() != 0.0 {
        return 0.0;
    }
    if lambda <= 0.0 {
        return if y == 0.0 { 1.0 } else { 0.0 };
    }
    (y * lambda.ln() - lambda - ln_gamma(y + 1.0)).exp()
}

/// Weighted Poisson regression (log link) by Newton's method with step
/// halving; the gradient of the mean log-likelihood is driven below
/// `opts.tolerance`.
pub fn poisson_fit(outcome: &[f64], design: &DMatrix<f64>, weights: &[f64]) -> Result<Vec<f64>> {
    poisson_fit_with(outcome, design, weights, &SolverOptions::default())
}

pub(crate) fn poisson_fit_with(
    outcome: &[f64],
    design: &DMatrix<f64>,
    weights: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let n = outcome.len();
    if design.nrows() != n || weights.len() != n {
        return Err(Error::InvalidInput("design, outcome and weights disagree in length".into()));
    }
    if let Some(i) = outcome.iter().position(|y| *y < 0.0 || y.fract() != 0.0) {
        return Err(Error::InvalidInput(format!(
            "Poisson outcome must be a nonnegative integer (row {i}: {})",
            outcome[i]
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let p = design.ncols();
    let mean = outcome.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / total;
    let mut beta = DVector::zeros(p);
    if let Some(j) = super::binary::unit_direction(design) {
        let start = mean.max(1e-300).ln().max(-opts.coefficient_cap);
        beta = j * start;
    }

    let loglik = |b: &DVector<f64>| -> f64 {
        let eta = design * b;
        (0..n)
            .filter(|&i| weights[i] > 0.0)
            .map(|i| weights[i] * (outcome[i] * eta[i] - eta[i].exp()))
            .sum::<f64>()
            / total
    };

    let mut ll = loglik(&beta);
    for iteration in 0..opts.max_iterations {
        let eta = design * &beta;
        let mut grad = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        for i in 0..n {
            let w = weights[i];
            if w == 0.0 {
                continue;
            }
            let mu = eta[i].exp();
            let x = design.row(i).transpose();
            grad.axpy(w * (outcome[i] - mu) / total, &x, 1.0);
            info.ger(w * mu / total, &x, &x, 1.0);
        }
        let gnorm = grad.amax();
        if gnorm <= opts.tolerance {
            return Ok(beta.iter().copied().collect());
        }
        let delta = solve_spd(&info, &grad)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &beta + &delta * t;
            let cand_ll = loglik(&cand);
            if cand_ll.is_finite() && cand_ll >= ll - 1e-14 * (1.0 + ll.abs()) {
                beta = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NonConvergence {
                iterations: iteration,
                gradient_norm: gnorm,
                coefficients: beta.iter().copied().collect(),
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        gradient_norm: f64::NAN,
        coefficients: beta.iter().copied().collect(),
    })
}
