use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::link::LinkFunction;

/// Newton steps larger than this count as still moving.
const STEP_TOLERANCE: f64 = 1e-6;

/// Newton solver settings shared by the binary and Poisson fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Sup-norm bound on the gradient of the weight-normalized
    /// log-likelihood.
    pub tolerance: f64,
    /// Box constraint `|b_j| <= cap` that stops coefficients from running
    /// off under perfect separation.
    pub coefficient_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-8,
            coefficient_cap: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryFit {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Some coefficient ended on the cap.
    pub separated: bool,
}

/// Weighted maximum likelihood for `P(D = 1 | x) = Lambda(x'b)`.
///
/// `threshold` is only consulted by the gamma-incomplete link. Fisher scoring
/// (which is Newton for the logit link) with step halving, started from the
/// intercept-only fit. Rows with zero weight are ignored. The linear link is
/// fitted by weighted least squares.
pub fn fit_binary(
    indicator: &[bool],
    design: &DMatrix<f64>,
    weights: &[f64],
    link: LinkFunction,
    threshold: f64,
) -> Result<BinaryFit> {
    fit_binary_with(indicator, design, weights, link, threshold, &SolverOptions::default())
}

pub(crate) fn fit_binary_with(
    indicator: &[bool],
    design: &DMatrix<f64>,
    weights: &[f64],
    link: LinkFunction,
    threshold: f64,
    opts: &SolverOptions,
) -> Result<BinaryFit> {
    let n = indicator.len();
    if design.nrows() != n || weights.len() != n {
        return Err(Error::InvalidInput(
            "indicator, design and weights disagree in length".into(),
        ));
    }
    let active: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    let total: f64 = active.iter().map(|&i| weights[i]).sum();
    if active.is_empty() || !(total > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let first = indicator[active[0]];
    if active.iter().all(|&i| indicator[i] == first) {
        return Err(Error::DegenerateIndicators { all_below: first });
    }
    if link == LinkFunction::Linear {
        return fit_linear(indicator, design, weights, &active, total);
    }

    let p = design.ncols();
    let cap = opts.coefficient_cap;
    let mean = active
        .iter()
        .filter(|&&i| indicator[i])
        .map(|&i| weights[i])
        .sum::<f64>()
        / total;
    let mut beta = match unit_direction(design) {
        Some(dir) => dir * link.inverse(mean, threshold).clamp(-cap, cap),
        None => DVector::zeros(p),
    };

    let loglik = |b: &DVector<f64>| -> f64 {
        let mut ll = 0.0;
        for &i in &active {
            let eta = design.row(i).dot(&b.transpose());
            let prob = if indicator[i] {
                link.cdf(eta, threshold)
            } else {
                link.ccdf(eta, threshold)
            };
            ll += weights[i] * prob.max(f64::MIN_POSITIVE).ln();
        }
        ll / total
    };

    let mut ll = loglik(&beta);
    let mut gnorm = f64::INFINITY;
    for iteration in 0..opts.max_iterations {
        let mut grad = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        for &i in &active {
            let x = design.row(i).transpose();
            let eta = x.dot(&beta);
            let cdf = link.cdf(eta, threshold).max(f64::MIN_POSITIVE);
            let ccdf = link.ccdf(eta, threshold).max(f64::MIN_POSITIVE);
            let dens = link.density(eta, threshold);
            let w = weights[i] / total;
            let score = if indicator[i] { dens / cdf } else { -dens / ccdf };
            grad.axpy(w * score, &x, 1.0);
            let v = dens * dens / (cdf * ccdf);
            if v.is_finite() && v > 0.0 {
                info.ger(w * v, &x, &x, 1.0);
            }
        }

        // Coordinates pinned at the cap with the gradient pushing outward
        // drop out of the Newton system.
        let free: Vec<usize> = (0..p)
            .filter(|&j| !(beta[j].abs() >= cap && grad[j] * beta[j] > 0.0))
            .collect();
        gnorm = free.iter().map(|&j| grad[j].abs()).fold(0.0, f64::max);

        let info_f = DMatrix::from_fn(free.len(), free.len(), |a, b| info[(free[a], free[b])]);
        let grad_f = DVector::from_fn(free.len(), |a, _| grad[free[a]]);
        let delta = solve_spd(&info_f, &grad_f)?;
        // A small gradient alone is not enough: under quasi-separation the
        // likelihood flattens out while the Newton step keeps pointing to
        // infinity.
        let drifting = delta.amax() > STEP_TOLERANCE;
        if gnorm <= opts.tolerance && (!drifting || iteration + 1 == opts.max_iterations) {
            // One last Newton step on the coordinates that have settled
            // brings them to machine precision; runaway coordinates of a
            // separated fit stay where they are.
            let settled: Vec<usize> = (0..free.len()).filter(|&a| delta[a].abs() <= STEP_TOLERANCE).collect();
            if !settled.is_empty() {
                let info_s = DMatrix::from_fn(settled.len(), settled.len(), |a, b| info_f[(settled[a], settled[b])]);
                let grad_s = DVector::from_fn(settled.len(), |a, _| grad_f[settled[a]]);
                if let Ok(d) = solve_spd(&info_s, &grad_s) {
                    let mut polished = beta.clone();
                    for (a, &s) in settled.iter().enumerate() {
                        let j = free[s];
                        polished[j] = (beta[j] + d[a]).clamp(-cap, cap);
                    }
                    if loglik(&polished) >= ll - 1e-12 * (1.0 + ll.abs()) {
                        beta = polished;
                    }
                }
            }
            return Ok(BinaryFit {
                coefficients: beta.iter().copied().collect(),
                iterations: iteration,
                gradient_norm: gnorm,
                separated: free.len() < p || drifting,
            });
        }

        let step = |t: f64| {
            let mut cand = beta.clone();
            for (a, &j) in free.iter().enumerate() {
                cand[j] = (beta[j] + t * delta[a]).clamp(-cap, cap);
            }
            cand
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = step(t);
            let cand_ll = loglik(&cand);
            if cand_ll.is_finite() && cand_ll >= ll - 1e-15 * (1.0 + ll.abs()) {
                accepted = Some((cand, cand_ll));
                break;
            }
            t *= 0.5;
        }
        let Some((mut cand, mut cand_ll)) = accepted else { break };
        if t == 1.0 && drifting {
            // Runaway directions: keep doubling while the likelihood improves
            // so that separated coefficients reach the cap quickly.
            for _ in 0..8 {
                t *= 2.0;
                let further = step(t);
                let further_ll = loglik(&further);
                if !(further_ll > cand_ll) || further == cand {
                    break;
                }
                cand = further;
                cand_ll = further_ll;
            }
        }
        if cand == beta {
            break;
        }
        beta = cand;
        ll = cand_ll;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        gradient_norm: gnorm,
        coefficients: beta.iter().copied().collect(),
    })
}

fn fit_linear(
    indicator: &[bool],
    design: &DMatrix<f64>,
    weights: &[f64],
    active: &[usize],
    total: f64,
) -> Result<BinaryFit> {
    let p = design.ncols();
    let mut xtwx = DMatrix::zeros(p, p);
    let mut xtwd = DVector::zeros(p);
    for &i in active {
        let x = design.row(i).transpose();
        let w = weights[i] / total;
        xtwx.ger(w, &x, &x, 1.0);
        if indicator[i] {
            xtwd.axpy(w, &x, 1.0);
        }
    }
    let beta = solve_spd(&xtwx, &xtwd)?;
    let gradient_norm = (&xtwd - &xtwx * &beta).amax();
    Ok(BinaryFit {
        coefficients: beta.iter().copied().collect(),
        iterations: 1,
        gradient_norm,
        separated: false,
    })
}

/// Solves `A x = b` for symmetric positive (semi)definite `A`, adding a
/// growing ridge when the Cholesky factorization fails.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    let scale = a.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut ridge = 1e-12 * scale;
    for _ in 0..12 {
        let mut m = a.clone();
        for k in 0..m.nrows() {
            m[(k, k)] += ridge;
        }
        if let Some(ch) = m.cholesky() {
            return Ok(ch.solve(b));
        }
        ridge *= 100.0;
    }
    Err(Error::Singular)
}

/// A coefficient vector `v` with `X v = 1` on every row: the intercept
/// column, or all-ones when the columns partition the rows into cells.
pub(crate) fn unit_direction(design: &DMatrix<f64>) -> Option<DVector<f64>> {
    let p = design.ncols();
    if let Some(j) = (0..p).find(|&j| design.column(j).iter().all(|&v| v == 1.0)) {
        let mut v = DVector::zeros(p);
        v[j] = 1.0;
        return Some(v);
    }
    let partitions = design.nrows() > 0
        && design
            .row_iter()
            .all(|r| r.iter().all(|&v| v == 0.0 || v == 1.0) && r.sum() == 1.0);
    partitions.then(|| DVector::from_element(p, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn intercept(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, 1, 1.0)
    }

    #[test]
    fn intercept_logit_is_log_odds_of_mean() {
        let d = [true, true, true, false];
        let fit = fit_binary(&d, &intercept(4), &[1.0; 4], LinkFunction::Logit, 0.0).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 3.0f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(fit.coefficients[0], 1.0986, epsilon = 1e-4);
        assert!(fit.gradient_norm <= 1e-8);
    }

    #[test]
    fn intercept_probit_symmetric() {
        let d = [true, false, true, false];
        let fit = fit_binary(&d, &intercept(4), &[1.0; 4], LinkFunction::Probit, 0.0).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn saturated_binary_covariate_gives_cell_means() {
        // cell x=0: 1 of 4 below; cell x=1: 3 of 5 below
        let x = [0., 0., 0., 0., 1., 1., 1., 1., 1.];
        let d = [true, false, false, false, true, true, true, false, false];
        let design = DMatrix::from_fn(9, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
        for link in [LinkFunction::Logit, LinkFunction::Probit, LinkFunction::Linear] {
            let fit = fit_binary(&d, &design, &[1.0; 9], link, 0.0).unwrap();
            let b = &fit.coefficients;
            assert_abs_diff_eq!(link.cdf(b[0], 0.0), 0.25, epsilon = 1e-9);
            assert_abs_diff_eq!(link.cdf(b[0] + b[1], 0.0), 0.6, epsilon = 1e-9);
        }
    }

    #[test]
    fn gamma_link_intercept_matches_mean() {
        let d = [true, true, false, false, false];
        let fit = fit_binary(&d, &intercept(5), &[1.0; 5], LinkFunction::GammaIncomplete, 2.0)
            .unwrap();
        assert_abs_diff_eq!(
            LinkFunction::GammaIncomplete.cdf(fit.coefficients[0], 2.0),
            0.4,
            epsilon = 1e-9
        );
    }

    #[test]
    fn degenerate_indicators_are_signalled() {
        let r = fit_binary(&[true, true], &intercept(2), &[1.0; 2], LinkFunction::Logit, 0.0);
        assert!(matches!(r, Err(Error::DegenerateIndicators { all_below: true })));
        // zero-weight rows do not count
        let r = fit_binary(&[false, true], &intercept(2), &[1.0, 0.0], LinkFunction::Logit, 0.0);
        assert!(matches!(r, Err(Error::DegenerateIndicators { all_below: false })));
    }

    #[test]
    fn separation_hits_cap_and_flags() {
        let x = [0., 0., 1., 1., 1.];
        let d = [false, false, true, false, true];
        let design = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 - x[i] } else { x[i] });
        let fit = fit_binary(&d, &design, &[1.0; 5], LinkFunction::Logit, 0.0).unwrap();
        assert!(fit.separated);
        assert_abs_diff_eq!(fit.coefficients[0], -30.0, epsilon = 1e-12);
        assert_abs_diff_eq!(LinkFunction::Logit.cdf(fit.coefficients[1], 0.0), 2.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn separated_cells_leave_the_other_cells_exact() {
        // cell 0 all zero, cell 1: 2 of 7, cell 2: 5 of 6
        let cell = [0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2];
        let d = [false, false, false, true, true, false, false, false, false, false, true, true, true, true, true, false];
        let design = DMatrix::from_fn(16, 3, |i, j| if cell[i] == j { 1.0 } else { 0.0 });
        for link in [LinkFunction::Logit, LinkFunction::Probit] {
            let fit = fit_binary(&d, &design, &[1.0; 16], link, 0.0).unwrap();
            let b = &fit.coefficients;
            assert!(fit.separated);
            assert!(link.cdf(b[0], 0.0) < 1e-12);
            assert_abs_diff_eq!(link.cdf(b[1], 0.0), 2.0 / 7.0, epsilon = 1e-12);
            assert_abs_diff_eq!(link.cdf(b[2], 0.0), 5.0 / 6.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn weighted_fit_equals_replicated_fit() {
        let d = [true, false, true];
        let w = [2.0, 1.0, 1.0];
        let a = fit_binary(&d, &intercept(3), &w, LinkFunction::Logit, 0.0).unwrap();
        let b = fit_binary(&[true, true, false, true], &intercept(4), &[1.0; 4], LinkFunction::Logit, 0.0)
            .unwrap();
        assert_abs_diff_eq!(a.coefficients[0], b.coefficients[0], epsilon = 1e-9);
    }
}
