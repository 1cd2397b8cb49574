//! Outcome grids and probability grids.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, strictly increasing set of outcome values together with the
/// upper end of the outcome domain.
///
/// The domain supremum is what the left-inverse returns for probability
/// levels a function never reaches. It defaults to the largest grid point and
/// may be set larger (including `+inf`) when the outcome domain extends past
/// the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid {
    points: Arc<[f64]>,
    domain_sup: f64,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.points, &other.points) || self.points == other.points)
            && self.domain_sup == other.domain_sup
    }
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        let sup = points.last().copied().unwrap_or(f64::NAN);
        Self::with_domain_sup(points, sup)
    }

    pub fn with_domain_sup(points: Vec<f64>, domain_sup: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite grid point at index {i}")));
        }
        if let Some(i) = points.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "points must be strictly increasing ({} >= {} at index {})",
                points[i],
                points[i + 1],
                i + 1
            )));
        }
        let last = points[points.len() - 1];
        if domain_sup.is_nan() || domain_sup < last {
            return Err(Error::InvalidGrid(format!(
                "domain supremum {domain_sup} lies below the largest grid point {last}"
            )));
        }
        Ok(Self {
            points: points.into(),
            domain_sup,
        })
    }

    /// The integer grid `{lo, lo + 1, ..., hi}`.
    pub fn integers(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidGrid(format!("empty integer range {lo}..={hi}")));
        }
        Self::new((lo..=hi).map(|v| v as f64).collect())
    }

    /// Sorted distinct finite values of `values`.
    pub fn from_observed(values: &[f64]) -> Result<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        Self::new(v)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn domain_sup(&self) -> f64 {
        self.domain_sup
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Index of the largest grid point `<= y`, if any.
    pub fn locate(&self, y: f64) -> Option<usize> {
        let k = self.points.partition_point(|&p| p <= y);
        k.checked_sub(1)
    }

    /// Index of the smallest grid point `>= y`, if any. An observation `y`
    /// is counted by `1{y <= t}` exactly for grid points from this index on.
    pub fn bin_of(&self, y: f64) -> Option<usize> {
        let k = self.points.partition_point(|&p| p < y);
        (k < self.points.len()).then_some(k)
    }
}

/// Strictly increasing probability levels in the open unit interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbGrid {
    indices: Vec<f64>,
}

impl Default for ProbGrid {
    /// `{0.01, 0.02, ..., 0.99}`.
    fn default() -> Self {
        Self {
            indices: (1..100).map(|k| k as f64 / 100.0).collect(),
        }
    }
}

impl ProbGrid {
    pub fn new(indices: Vec<f64>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidProbGrid("grid is empty".into()));
        }
        if let Some(a) = indices.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::InvalidProbGrid(format!("{a} is outside (0, 1)")));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidProbGrid("indices must be strictly increasing".into()));
        }
        Ok(Self { indices })
    }

    /// Evenly spaced levels `from, from + step, ...` up to and including `to`
    /// (within rounding). Levels are computed as `from + k * step` and
    /// rounded to 12 decimals so `0.1 + 80 * 0.01` lands on `0.9`.
    pub fn range(from: f64, to: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(to >= from) {
            return Err(Error::InvalidProbGrid(format!(
                "bad range {from}..{to} step {step}"
            )));
        }
        let count = ((to - from) / step + 1e-9).floor() as usize + 1;
        let indices = (0..count)
            .map(|k| ((from + k as f64 * step) * 1e12).round() / 1e12)
            .collect();
        Self::new(indices)
    }

    pub fn indices(&self) -> &[f64] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.indices[0]
    }

    pub fn last(&self) -> f64 {
        self.indices[self.indices.len() - 1]
    }

    /// This grid plus every value of `extra` lying within
    /// `[first, last]`, deduplicated.
    pub fn augmented_with<I: IntoIterator<Item = f64>>(&self, extra: I) -> Self {
        let (lo, hi) = (self.first(), self.last());
        let mut v = self.indices.clone();
        v.extend(extra.into_iter().filter(|a| *a >= lo && *a <= hi));
        v.sort_by(f64::total_cmp);
        v.dedup();
        Self { indices: v }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_and_empty() {
        assert!(Grid::new(vec![]).is_err());
        assert!(Grid::new(vec![0.0, 0.0]).is_err());
        assert!(Grid::new(vec![1.0, 0.0]).is_err());
        assert!(Grid::with_domain_sup(vec![0.0, 2.0], 1.0).is_err());
        assert!(Grid::with_domain_sup(vec![0.0, 2.0], f64::INFINITY).is_ok());
    }

    #[test]
    fn locate_and_bin() {
        let g = Grid::integers(0, 3).unwrap();
        assert_eq!(g.locate(-0.5), None);
        assert_eq!(g.locate(0.0), Some(0));
        assert_eq!(g.locate(2.5), Some(2));
        assert_eq!(g.locate(9.0), Some(3));
        assert_eq!(g.bin_of(-3.0), Some(0));
        assert_eq!(g.bin_of(1.0), Some(1));
        assert_eq!(g.bin_of(1.5), Some(2));
        assert_eq!(g.bin_of(3.5), None);
    }

    #[test]
    fn default_prob_grid() {
        let p = ProbGrid::default();
        assert_eq!(p.len(), 99);
        assert_eq!(p.first(), 0.01);
        assert_eq!(p.last(), 0.99);
    }

    #[test]
    fn prob_range_hits_endpoints() {
        let p = ProbGrid::range(0.1, 0.9, 0.01).unwrap();
        assert_eq!(p.len(), 81);
        assert_eq!(p.first(), 0.1);
        assert_eq!(p.last(), 0.9);
        assert_eq!(p.indices()[50], 0.6);
    }

    #[test]
    fn augmentation_stays_in_range() {
        let p = ProbGrid::new(vec![0.2, 0.5]).unwrap();
        let q = p.augmented_with([0.1, 0.3, 0.5, 0.7]);
        assert_eq!(q.indices(), &[0.2, 0.3, 0.5]);
    }
}
