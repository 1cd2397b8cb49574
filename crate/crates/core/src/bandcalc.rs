//! Bootstrap max-t critical values, DF-bands, their inversion into
//! quantile bands, and quantile-effect bands built by Minkowski differences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band::{DFBand, IntervalBand, QEBand, QuantileBand};
use crate::error::{Error, Result};
use crate::grid::ProbGrid;
use crate::resample::BootstrapDraws;
use crate::shape::{clip_unit, intersect_monotone, shape_values, ShapeMode};
use crate::stepfn::MonotoneStepFn;

/// `Phi^{-1}(0.75) - Phi^{-1}(0.25)`.
pub const NORMAL_IQR: f64 = 1.348_979_500_392_163_4;

/// The `ceil(alpha * B)`-th smallest of `values` (1-based, clamped to
/// `1..=B`). A relative slack of 1e-9 keeps `alpha * B` that is an integer
/// up to rounding from jumping to the next order statistic.
pub fn order_statistic(values: &[f64], alpha: f64) -> f64 {
    assert!(!values.is_empty(), "order statistic of an empty sample");
    let b = values.len();
    let k = ((alpha * b as f64 - 1e-9).ceil() as usize).clamp(1, b);
    let mut v = values.to_vec();
    let (_, kth, _) = v.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// Rescaled interquartile range of bootstrap draws.
pub fn robust_se(draws: &[f64]) -> f64 {
    ((order_statistic(draws, 0.75) - order_statistic(draws, 0.25)) / NORMAL_IQR).max(0.0)
}

/// Robust standard errors for every `(k, t)` of `draws`, indexed `[k][t]`.
pub fn robust_ses(draws: &BootstrapDraws) -> Vec<Vec<f64>> {
    (0..draws.groups())
        .map(|k| {
            (0..draws.points())
                .into_par_iter()
                .map(|t| robust_se(&draws.column(k, t)))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueReport {
    pub critical_value: f64,
    /// Robust standard errors `[k][t]` for every estimator in the draws.
    pub standard_errors: Vec<Vec<f64>>,
    /// `(k, t)` pairs with a zero standard error, left out of the maxima.
    pub excluded: Vec<(usize, usize)>,
    /// Estimators entering the maximum.
    pub groups: Vec<usize>,
    pub level: f64,
    pub draws: usize,
}

fn check_level(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!("level {p} is not in (0, 1)")));
    }
    Ok(())
}

/// Per-draw maxima of `|F*_k(y) - F_k(y)| / s_k(y)` over the non-excluded
/// points of `groups`, in draw order.
pub fn max_t_statistics(
    draws: &BootstrapDraws,
    estimates: &[Vec<f64>],
    ses: &[Vec<f64>],
    groups: &[usize],
) -> Result<Vec<f64>> {
    let active: Vec<(usize, usize)> = groups
        .iter()
        .flat_map(|&k| (0..draws.points()).map(move |t| (k, t)))
        .filter(|&(k, t)| ses[k][t] > 0.0)
        .collect();
    if active.is_empty() {
        return Err(Error::AllPointsExcluded);
    }
    Ok((0..draws.draws())
        .into_par_iter()
        .map(|b| {
            active
                .iter()
                .map(|&(k, t)| (draws.get(b, k, t) - estimates[k][t]).abs() / ses[k][t])
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Critical value `c(p)` of the max-t statistic over the estimators in
/// `groups`, with standard errors computed from the draws.
pub fn critical_value(
    draws: &BootstrapDraws,
    estimates: &[Vec<f64>],
    groups: &[usize],
    p: f64,
) -> Result<CriticalValueReport> {
    critical_value_with(draws, estimates, robust_ses(draws), groups, p)
}

/// As [`critical_value`] with precomputed standard errors.
pub fn critical_value_with(
    draws: &BootstrapDraws,
    estimates: &[Vec<f64>],
    ses: Vec<Vec<f64>>,
    groups: &[usize],
    p: f64,
) -> Result<CriticalValueReport> {
    check_level(p)?;
    if estimates.len() != draws.groups() || estimates.iter().any(|e| e.len() != draws.points()) {
        return Err(Error::GridMismatch);
    }
    let maxima = max_t_statistics(draws, estimates, &ses, groups)?;
    let excluded = groups
        .iter()
        .flat_map(|&k| (0..draws.points()).map(move |t| (k, t)))
        .filter(|&(k, t)| ses[k][t] <= 0.0)
        .collect();
    Ok(CriticalValueReport {
        critical_value: order_statistic(&maxima, p),
        standard_errors: ses,
        excluded,
        groups: groups.to_vec(),
        level: p,
        draws: draws.draws(),
    })
}

/// How preliminary band edges `F +- c s` are turned into a DF-band.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BandShaping {
    pub mode: ShapeMode,
    /// Use the monotone envelope intersection instead of shaping both edges;
    /// falls back to `mode` when the intersection is empty.
    #[serde(default)]
    pub intersect: bool,
}

/// A shaped DF-band and whether the requested intersection came out empty.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltBand {
    pub band: DFBand,
    pub intersection_empty: bool,
}

/// DF-band from a point estimate, its standard errors and a critical value.
pub fn build_band(
    estimate: &MonotoneStepFn,
    ses: &[f64],
    c: f64,
    p: f64,
    shaping: BandShaping,
) -> Result<BuiltBand> {
    let f = estimate.values();
    if ses.len() != f.len() {
        return Err(Error::GridMismatch);
    }
    let lower: Vec<f64> = f.iter().zip(ses).map(|(v, s)| v - c * s).collect();
    let upper: Vec<f64> = f.iter().zip(ses).map(|(v, s)| v + c * s).collect();
    let grid = estimate.grid().clone();
    if shaping.intersect {
        if let Some((l, u)) = intersect_monotone(&lower, &upper) {
            return Ok(BuiltBand {
                band: DFBand::new(MonotoneStepFn::new(grid.clone(), l)?, MonotoneStepFn::new(grid, u)?, p)?,
                intersection_empty: false,
            });
        }
    }
    let l = shape_values(&clip_unit(&lower), shaping.mode);
    let u = shape_values(&clip_unit(&upper), shaping.mode);
    Ok(BuiltBand {
        band: DFBand::new(MonotoneStepFn::new(grid.clone(), l)?, MonotoneStepFn::new(grid, u)?, p)?,
        intersection_empty: shaping.intersect,
    })
}

/// Joint p-level DF-bands for every estimator in the draws (one critical
/// value for all of them).
pub fn df_bands_joint(
    estimates: &[MonotoneStepFn],
    draws: &BootstrapDraws,
    p: f64,
    shaping: BandShaping,
) -> Result<(Vec<BuiltBand>, CriticalValueReport)> {
    let groups: Vec<usize> = (0..estimates.len()).collect();
    df_bands_for(estimates, draws, &groups, p, shaping)
}

/// DF-bands for the estimators in `groups`, with a critical value taken
/// over those estimators only.
pub fn df_bands_for(
    estimates: &[MonotoneStepFn],
    draws: &BootstrapDraws,
    groups: &[usize],
    p: f64,
    shaping: BandShaping,
) -> Result<(Vec<BuiltBand>, CriticalValueReport)> {
    let values: Vec<Vec<f64>> = estimates.iter().map(|e| e.values().to_vec()).collect();
    let report = critical_value(draws, &values, groups, p)?;
    let bands = groups
        .iter()
        .map(|&k| {
            build_band(
                &estimates[k],
                &report.standard_errors[k],
                report.critical_value,
                p,
                shaping,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((bands, report))
}

/// Band for estimator `k` alone.
pub fn df_band_single(
    estimates: &[MonotoneStepFn],
    draws: &BootstrapDraws,
    k: usize,
    p: f64,
    shaping: BandShaping,
) -> Result<(BuiltBand, CriticalValueReport)> {
    let (mut bands, report) = df_bands_for(estimates, draws, &[k], p, shaping)?;
    Ok((bands.remove(0), report))
}

/// `[U<-(a), L<-(a)]` at exactly the indices of `prob_grid`.
pub fn invert_band_exact(band: &DFBand, prob_grid: &ProbGrid) -> QuantileBand {
    let a = prob_grid.indices();
    let lo = a.iter().map(|&a| band.upper().left_inverse(a)).collect();
    let hi = a.iter().map(|&a| band.lower().left_inverse(a)).collect();
    IntervalBand::new(prob_grid.clone(), lo, hi, None).expect("inverted band is ordered")
}

/// Inverts a DF-band into a quantile band on `prob_grid` augmented with the
/// jump levels of both edges lying inside its range.
pub fn invert_band(band: &DFBand, prob_grid: &ProbGrid) -> QuantileBand {
    invert_bands(&[band], prob_grid).remove(0)
}

/// Inverts several bands onto one common grid augmented with every jump
/// level of every band.
pub fn invert_bands(bands: &[&DFBand], prob_grid: &ProbGrid) -> Vec<QuantileBand> {
    let grid = prob_grid.augmented_with(bands.iter().flat_map(|b| b.levels()));
    bands.iter().map(|b| invert_band_exact(b, &grid)).collect()
}

/// Intersects every interval with a finite support set, tightening the
/// endpoints to the admissible values when any remain.
pub fn restrict_support(band: &QuantileBand, support: &[f64]) -> Result<QuantileBand> {
    if support.is_empty() {
        return Err(Error::InvalidInput("support set is empty".into()));
    }
    let mut support = support.to_vec();
    support.sort_by(f64::total_cmp);
    support.dedup();
    let n = band.len();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    let mut sets = Vec::with_capacity(n);
    for i in 0..n {
        let (l, h) = band.interval(i);
        let mut set: Vec<f64> = support.iter().copied().filter(|&v| l <= v && v <= h).collect();
        if let Some(prev) = band.admissible() {
            set.retain(|v| prev[i].is_empty() || prev[i].contains(v));
        }
        match (set.first(), set.last()) {
            (Some(&a), Some(&b)) => {
                lo.push(a);
                hi.push(b);
            }
            _ => {
                lo.push(l);
                hi.push(h);
            }
        }
        sets.push(set);
    }
    IntervalBand::new(band.prob_grid().clone(), lo, hi, Some(sets))
}

fn same_grid(j: &QuantileBand, m: &QuantileBand) -> Result<()> {
    if j.prob_grid() != m.prob_grid() {
        return Err(Error::ProbGridMismatch);
    }
    Ok(())
}

/// Quantile-effect band `Q_j - Q_m` by pointwise Minkowski difference.
///
/// When both bands carry admissible sets the result carries every pairwise
/// difference `v - u` with `joint(v, u)` true.
pub fn qe_band_filtered<P>(j: &QuantileBand, m: &QuantileBand, joint: P) -> Result<QEBand>
where
    P: Fn(f64, f64) -> bool,
{
    same_grid(j, m)?;
    let joint = &joint;
    let n = j.len();
    let lo = (0..n).map(|i| j.lo()[i] - m.hi()[i]).collect();
    let hi = (0..n).map(|i| j.hi()[i] - m.lo()[i]).collect();
    let admissible = match (j.admissible(), m.admissible()) {
        (Some(sj), Some(sm)) => Some(
            (0..n)
                .map(|i| {
                    let mut d: Vec<f64> = sj[i]
                        .iter()
                        .flat_map(|&v| sm[i].iter().filter(move |&&u| joint(v, u)).map(move |&u| v - u))
                        .collect();
                    d.sort_by(f64::total_cmp);
                    d.dedup();
                    d
                })
                .collect(),
        ),
        _ => None,
    };
    IntervalBand::new(j.prob_grid().clone(), lo, hi, admissible)
}

pub fn qe_band(j: &QuantileBand, m: &QuantileBand) -> Result<QEBand> {
    qe_band_filtered(j, m, |_, _| true)
}

/// Band for the ratio `Q_j / Q_m`; the denominator band must be strictly
/// positive.
pub fn ratio_band(j: &QuantileBand, m: &QuantileBand) -> Result<QEBand> {
    same_grid(j, m)?;
    if let Some(index) = m.lo().iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveDenominator {
            index,
            value: m.lo()[index],
        });
    }
    // With a positive denominator the extremes sit at the corners; for a
    // nonnegative numerator they are `lo_j / hi_m` and `hi_j / lo_m`.
    let (lo, hi) = (0..j.len())
        .map(|i| {
            let corners = [
                j.lo()[i] / m.lo()[i],
                j.lo()[i] / m.hi()[i],
                j.hi()[i] / m.lo()[i],
                j.hi()[i] / m.hi()[i],
            ];
            let mn = corners.iter().copied().fold(f64::INFINITY, f64::min);
            let mx = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (mn, mx)
        })
        .unzip();
    IntervalBand::new(j.prob_grid().clone(), lo, hi, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityTest {
    pub reject: bool,
    /// Probability-grid indices whose band excludes zero.
    pub indices: Vec<usize>,
    /// Indices with an empty admissible set whose interval still contains
    /// zero; these do not count toward rejection.
    pub empty_but_covering: Vec<usize>,
}

/// Rejects equality of two quantile functions when the effect band misses
/// zero somewhere. An empty admissible set counts as missing zero only if
/// the interval itself excludes zero.
pub fn test_equality(qe: &QEBand) -> EqualityTest {
    let mut indices = Vec::new();
    let mut empty_but_covering = Vec::new();
    for i in 0..qe.len() {
        let (l, h) = qe.interval(i);
        let in_interval = l <= 0.0 && 0.0 <= h;
        let excluded = match qe.admissible().map(|s| &s[i]) {
            Some(set) if !set.is_empty() => !set.contains(&0.0),
            Some(_) => {
                if in_interval {
                    empty_but_covering.push(i);
                }
                !in_interval
            }
            None => !in_interval,
        };
        if excluded {
            indices.push(i);
        }
    }
    EqualityTest {
        reject: !indices.is_empty(),
        indices,
        empty_but_covering,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::resample::BootstrapConfig;
    use approx::assert_abs_diff_eq;

    fn step(values: &[f64]) -> MonotoneStepFn {
        MonotoneStepFn::new(Grid::integers(0, values.len() as i64 - 1).unwrap(), values.to_vec()).unwrap()
    }

    fn qband(lo: &[f64], hi: &[f64], sets: Option<Vec<Vec<f64>>>) -> QuantileBand {
        let grid = ProbGrid::new((1..=lo.len()).map(|i| i as f64 / (lo.len() + 1) as f64).collect()).unwrap();
        IntervalBand::new(grid, lo.to_vec(), hi.to_vec(), sets).unwrap()
    }

    #[test]
    fn order_statistic_convention() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(order_statistic(&v, 0.9), 0.9);
        assert_eq!(order_statistic(&v, 0.95), 1.0);
        assert_eq!(order_statistic(&v, 0.0), 0.1);
    }

    #[test]
    fn robust_se_examples() {
        assert_eq!(robust_se(&[0.3; 20]), 0.0);
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_abs_diff_eq!(robust_se(&v), 50.0 / NORMAL_IQR, epsilon = 1e-12);
        assert_abs_diff_eq!(robust_se(&v), 37.065, epsilon = 1e-3);
        let normal = statrs::distribution::Normal::standard();
        use statrs::distribution::ContinuousCDF;
        assert_abs_diff_eq!(2.0 * normal.inverse_cdf(0.75), NORMAL_IQR, epsilon = 1e-15);
    }

    fn draws_from(slices: Vec<Vec<Vec<f64>>>) -> BootstrapDraws {
        BootstrapDraws::from_slices(BootstrapConfig::default(), slices).unwrap()
    }

    #[test]
    fn symmetric_unit_draws_give_unit_critical_value() {
        let slices: Vec<_> = (0..20).map(|b| vec![vec![if b % 2 == 0 { 1.5 } else { -0.5 }]]).collect();
        let draws = draws_from(slices);
        for p in [0.5, 0.9, 0.99] {
            let r = critical_value_with(&draws, &[vec![0.5]], vec![vec![1.0]], &[0], p).unwrap();
            assert_eq!(r.critical_value, 1.0);
        }
    }

    #[test]
    fn zero_se_points_are_excluded() {
        let slices: Vec<_> = (0..10).map(|b| vec![vec![0.0, 0.3 + 0.01 * b as f64, 1.0]]).collect();
        let draws = draws_from(slices);
        let r = critical_value(&draws, &[vec![0.0, 0.35, 1.0]], &[0], 0.9).unwrap();
        assert_eq!(r.excluded, vec![(0, 0), (0, 2)]);
        let flat = draws_from((0..10).map(|_| vec![vec![0.5]]).collect());
        assert!(matches!(
            critical_value(&flat, &[vec![0.5]], &[0], 0.9),
            Err(Error::AllPointsExcluded)
        ));
    }

    #[test]
    fn zero_critical_value_collapses_band() {
        let f = step(&[0.2, 0.2, 0.7, 1.0]);
        let b = build_band(&f, &[0.1; 4], 0.0, 0.9, BandShaping::default()).unwrap();
        assert_eq!(b.band.lower(), &f);
        assert_eq!(b.band.upper(), &f);
    }

    #[test]
    fn inversion_example() {
        let l = step(&[0.3, 0.6, 0.9]);
        let u = step(&[0.5, 0.8, 1.0]);
        let band = DFBand::new(l, u, 0.9).unwrap();
        let q = invert_band_exact(&band, &ProbGrid::new(vec![0.5]).unwrap());
        assert_eq!(q.interval(0), (0.0, 1.0));
    }

    #[test]
    fn inversion_grid_includes_jump_levels() {
        let band = DFBand::new(step(&[0.3, 0.6, 0.9]), step(&[0.5, 0.8, 1.0]), 0.9).unwrap();
        let q = invert_band(&band, &ProbGrid::new(vec![0.1, 0.95]).unwrap());
        assert_eq!(q.prob_grid().indices(), &[0.1, 0.3, 0.5, 0.6, 0.8, 0.9, 0.95]);
    }

    #[test]
    fn support_restriction_examples() {
        let q = qband(&[0.3, 0.2], &[2.7, 0.8], None);
        let r = restrict_support(&q, &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.admissible().unwrap()[0], vec![1.0, 2.0]);
        assert_eq!(r.interval(0), (1.0, 2.0));
        assert!(r.admissible().unwrap()[1].is_empty());
        assert_eq!(r.empty_indices(), vec![1]);
        assert_eq!(r.interval(1), (0.2, 0.8));
    }

    #[test]
    fn minkowski_examples() {
        let d = qe_band(&qband(&[1.0, 2.0], &[3.0, 2.0], None), &qband(&[0.0, 2.0], &[2.0, 2.0], None)).unwrap();
        assert_eq!(d.interval(0), (-1.0, 3.0));
        assert_eq!(d.interval(1), (0.0, 0.0));
        let j = qband(&[0.0], &[2.0], Some(vec![vec![0.0, 2.0]]));
        let m = qband(&[0.0], &[1.0], Some(vec![vec![0.0, 1.0]]));
        let d = qe_band(&j, &m).unwrap();
        assert_eq!(d.admissible().unwrap()[0], vec![-1.0, 0.0, 1.0, 2.0]);
        let d = qe_band_filtered(&j, &m, |v, _| v != 2.0).unwrap();
        assert_eq!(d.admissible().unwrap()[0], vec![-1.0, 0.0]);
    }

    #[test]
    fn ratio_examples() {
        let r = ratio_band(&qband(&[2.0, 3.0], &[4.0, 3.0], None), &qband(&[1.0, 3.0], &[2.0, 3.0], None)).unwrap();
        assert_eq!(r.interval(0), (1.0, 4.0));
        assert_eq!(r.interval(1), (1.0, 1.0));
        let err = ratio_band(&qband(&[1.0], &[2.0], None), &qband(&[0.0], &[1.0], None)).unwrap_err();
        assert!(matches!(err, Error::NonPositiveDenominator { index: 0, .. }));
    }

    #[test]
    fn equality_test_examples() {
        assert!(!test_equality(&qband(&[-1.0, 0.0], &[1.0, 2.0], None)).reject);
        let t = test_equality(&qband(&[-1.0, 0.5], &[1.0, 1.2], None));
        assert!(t.reject);
        assert_eq!(t.indices, vec![1]);
        let t = test_equality(&qband(&[-1.0], &[1.0], Some(vec![vec![-1.0, 1.0]])));
        assert!(t.reject);
        let t = test_equality(&qband(&[-0.5], &[0.5], Some(vec![vec![]])));
        assert!(!t.reject);
        assert_eq!(t.empty_but_covering, vec![0]);
    }
}
