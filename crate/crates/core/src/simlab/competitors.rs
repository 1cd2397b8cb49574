//! Alternative quantile-effect bands used as benchmarks: constant-width
//! bands from the bootstrapped QE function, and sup-t bands from jittered
//! outcomes.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band::{IntervalBand, QEBand};
use crate::bandcalc::{order_statistic, robust_se};
use crate::error::Result;
use crate::grid::ProbGrid;
use crate::resample::{draw_weights, BootstrapConfig};

/// A sample sorted once, for repeated weighted quantile evaluation.
#[derive(Debug, Clone)]
pub struct SortedSample {
    values: Vec<f64>,
    order: Vec<usize>,
}

impl SortedSample {
    pub fn new(values: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        Self {
            values: order.iter().map(|&i| values[i]).collect(),
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Weighted left-inverse quantiles `inf{v : F_w(v) >= a}` at the
    /// increasing levels `probs`; `weights` are in original sample order.
    pub fn quantiles(&self, weights: &[f64], probs: &[f64]) -> Vec<f64> {
        let total: f64 = weights.iter().sum();
        let mut out = Vec::with_capacity(probs.len());
        let mut cum = 0.0;
        let mut i = 0;
        for &a in probs {
            // Advance to the first order statistic whose cumulative share
            // reaches a; ties are absorbed because shares only grow at the
            // end of a run of equal values.
            while i < self.values.len() {
                let at_run_end = i + 1 == self.values.len() || self.values[i + 1] != self.values[i];
                let next = cum + weights[self.order[i]];
                if at_run_end && next / total >= a {
                    break;
                }
                cum = next;
                i += 1;
            }
            out.push(self.values[i.min(self.values.len() - 1)]);
        }
        out
    }
}

/// `Q_1(a) - Q_0(a)` from weighted samples.
pub fn qe_estimate(
    treated: &SortedSample,
    control: &SortedSample,
    w_treated: &[f64],
    w_control: &[f64],
    probs: &[f64],
) -> Vec<f64> {
    let q1 = treated.quantiles(w_treated, probs);
    let q0 = control.quantiles(w_control, probs);
    q1.iter().zip(&q0).map(|(a, b)| a - b).collect()
}

/// `estimate +- c` with `c` the p-quantile of `sup_a |draw - estimate|`.
pub fn constant_width_band(
    prob_grid: &ProbGrid,
    estimate: &[f64],
    draws: &[Vec<f64>],
    p: f64,
) -> Result<QEBand> {
    let sups: Vec<f64> = draws
        .iter()
        .map(|d| d.iter().zip(estimate).map(|(x, e)| (x - e).abs()).fold(0.0, f64::max))
        .collect();
    let c = order_statistic(&sups, p);
    IntervalBand::new(
        prob_grid.clone(),
        estimate.iter().map(|e| e - c).collect(),
        estimate.iter().map(|e| e + c).collect(),
        None,
    )
}

/// Robust bootstrap standard error at every probability index.
pub fn pointwise_ses(draws: &[Vec<f64>], len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| robust_se(&draws.iter().map(|d| d[i]).collect::<Vec<_>>()))
        .collect()
}

/// Sup-t band `center +- c s(a)`, with `c` the p-quantile of the studentized
/// maximum deviation of the draws from `estimate`. Indices with a zero
/// standard error are left out of the maximum and get zero width.
pub fn sup_t_band(
    prob_grid: &ProbGrid,
    center: &[f64],
    estimate: &[f64],
    draws: &[Vec<f64>],
    p: f64,
) -> Result<QEBand> {
    let se = pointwise_ses(draws, estimate.len());
    let maxima: Vec<f64> = draws
        .iter()
        .map(|d| {
            d.iter()
                .zip(estimate)
                .zip(&se)
                .filter(|(_, &s)| s > 0.0)
                .map(|((x, e), s)| (x - e).abs() / s)
                .fold(0.0, f64::max)
        })
        .collect();
    let c = order_statistic(&maxima, p);
    IntervalBand::new(
        prob_grid.clone(),
        center.iter().zip(&se).map(|(m, s)| m - c * s).collect(),
        center.iter().zip(&se).map(|(m, s)| m + c * s).collect(),
        None,
    )
}

/// Share of probability indices where the bootstrapped raw QE function has
/// a zero robust standard error, which makes a sup-t statistic undefined.
pub fn zero_se_share(draws: &[Vec<f64>], len: usize) -> f64 {
    let se = pointwise_ses(draws, len);
    se.iter().filter(|&&s| s == 0.0).count() as f64 / len as f64
}

/// Adds independent Uniform[0, 1) noise to every observation.
pub fn jitter<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> Vec<f64> {
    values.iter().map(|v| v + rng.random::<f64>()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JitterCenter {
    /// Centered on the QE function of the jittered outcomes.
    Smoothed,
    /// Centered on the QE function of the original outcomes.
    Raw,
}

fn bootstrap_qe(
    treated: &SortedSample,
    control: &SortedSample,
    prob_grid: &ProbGrid,
    config: &BootstrapConfig,
) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let (n1, n0) = (treated.len(), control.len());
    Ok((0..config.draws)
        .into_par_iter()
        .map(|b| {
            let w = draw_weights(config, n1 + n0, None, b);
            qe_estimate(treated, control, &w[..n1], &w[n1..], prob_grid.indices())
        })
        .collect())
}

/// Constant-width band for `Q_1 - Q_0` from two independent samples.
pub fn competitor_constant_width(
    treated: &[f64],
    control: &[f64],
    config: &BootstrapConfig,
    p: f64,
    prob_grid: &ProbGrid,
) -> Result<QEBand> {
    let (s1, s0) = (SortedSample::new(treated), SortedSample::new(control));
    let est = qe_estimate(&s1, &s0, &vec![1.0; s1.len()], &vec![1.0; s0.len()], prob_grid.indices());
    let draws = bootstrap_qe(&s1, &s0, prob_grid, config)?;
    constant_width_band(prob_grid, &est, &draws, p)
}

/// Sup-t band from the bootstrapped QE function of jittered outcomes.
/// `noise_rng` supplies the jitter, drawn once and reused by every draw.
pub fn competitor_jitter<R: Rng + ?Sized>(
    treated: &[f64],
    control: &[f64],
    config: &BootstrapConfig,
    p: f64,
    prob_grid: &ProbGrid,
    center: JitterCenter,
    noise_rng: &mut R,
) -> Result<QEBand> {
    let (z1, z0) = (jitter(treated, noise_rng), jitter(control, noise_rng));
    let (s1, s0) = (SortedSample::new(&z1), SortedSample::new(&z0));
    let ones = |n| vec![1.0; n];
    let smoothed = qe_estimate(&s1, &s0, &ones(s1.len()), &ones(s0.len()), prob_grid.indices());
    let draws = bootstrap_qe(&s1, &s0, prob_grid, config)?;
    let middle = match center {
        JitterCenter::Smoothed => smoothed.clone(),
        JitterCenter::Raw => {
            let (r1, r0) = (SortedSample::new(treated), SortedSample::new(control));
            qe_estimate(&r1, &r0, &ones(r1.len()), &ones(r0.len()), prob_grid.indices())
        }
    };
    sup_t_band(prob_grid, &middle, &smoothed, &draws, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resample::{stream_rng, WeightScheme};

    #[test]
    fn weighted_quantiles_are_left_inverses() {
        let s = SortedSample::new(&[3.0, 1.0, 2.0, 1.0]);
        let q = s.quantiles(&[1.0; 4], &[0.1, 0.5, 0.51, 0.75, 0.76, 1.0]);
        assert_eq!(q, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        // weights follow the original order: the 3.0 carries half the mass
        let q = s.quantiles(&[2.0, 1.0, 0.0, 1.0], &[0.5, 0.51]);
        assert_eq!(q, vec![1.0, 3.0]);
    }

    #[test]
    fn identical_draws_give_zero_width() {
        let grid = ProbGrid::new(vec![0.25, 0.5]).unwrap();
        let est = vec![1.0, -1.0];
        let band = constant_width_band(&grid, &est, &vec![est.clone(); 10], 0.95).unwrap();
        assert_eq!(band.lo(), band.hi());
        assert_eq!(band.lo(), &est[..]);
    }

    #[test]
    fn constant_width_is_constant() {
        let grid = ProbGrid::range(0.1, 0.9, 0.1).unwrap();
        let mut rng = stream_rng(3, 0);
        let y1: Vec<f64> = (0..200).map(|_| rng.random_range(0..6) as f64).collect();
        let y0: Vec<f64> = (0..200).map(|_| rng.random_range(0..6) as f64).collect();
        let cfg = BootstrapConfig {
            scheme: WeightScheme::Multinomial,
            draws: 100,
            master_seed: 1,
            cluster_by: None,
        };
        let band = competitor_constant_width(&y1, &y0, &cfg, 0.9, &grid).unwrap();
        let widths: Vec<f64> = (0..band.len()).map(|i| band.hi()[i] - band.lo()[i]).collect();
        assert!(widths.iter().all(|&w| w == widths[0]));
    }

    #[test]
    fn jittered_quantiles_of_a_constant_sample() {
        let mut rng = stream_rng(9, 0);
        let z = jitter(&[4.0; 50], &mut rng);
        let s = SortedSample::new(&z);
        let q = s.quantiles(&[1.0; 50], &[0.1, 0.5, 0.9]);
        assert!(q.iter().all(|&v| (4.0..5.0).contains(&v)));
    }

    #[test]
    fn jitter_variants_share_widths() {
        let grid = ProbGrid::range(0.1, 0.9, 0.05).unwrap();
        let mut rng = stream_rng(4, 0);
        let y1: Vec<f64> = (0..300).map(|_| rng.random_range(0..5) as f64).collect();
        let y0: Vec<f64> = (0..300).map(|_| rng.random_range(0..5) as f64).collect();
        let cfg = BootstrapConfig {
            draws: 50,
            ..BootstrapConfig::default()
        };
        let a = competitor_jitter(&y1, &y0, &cfg, 0.95, &grid, JitterCenter::Smoothed, &mut stream_rng(8, 0))
            .unwrap();
        let b = competitor_jitter(&y1, &y0, &cfg, 0.95, &grid, JitterCenter::Raw, &mut stream_rng(8, 0)).unwrap();
        assert!((a.mean_length() - b.mean_length()).abs() < 1e-12);
        for i in 0..b.len() {
            let mid = 0.5 * (b.lo()[i] + b.hi()[i]);
            assert!((mid - mid.round()).abs() < 1e-9, "raw center is an integer difference");
        }
    }
}
