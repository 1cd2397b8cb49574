//! Nondecreasing `[0, 1]`-valued step functions on a finite grid and their
//! generalized inverses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// A nondecreasing function from the outcome domain into `[0, 1]`, stored by
/// its values on a [`Grid`] and extended between grid points as a
/// right-continuous step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneStepFn {
    grid: Grid,
    values: Vec<f64>,
}

impl MonotoneStepFn {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        let mut prev = 0.0;
        for (index, &value) in values.iter().enumerate() {
            if !(value >= prev && value <= 1.0) {
                return Err(Error::NotMonotone { index, value });
            }
            prev = value;
        }
        Ok(Self { grid, values })
    }

    /// Constant function.
    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert!(Self::new(grid.clone(), values.clone()).is_ok());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `sup G`, attained at the last grid point.
    pub fn sup(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Step-function evaluation; zero to the left of the grid.
    pub fn eval(&self, y: f64) -> f64 {
        self.grid.locate(y).map_or(0.0, |i| self.values[i])
    }

    /// `G<-(a) = inf{y : G(y) >= a}`, or the domain supremum when `G` never
    /// reaches `a`.
    pub fn left_inverse(&self, a: f64) -> f64 {
        let k = self.values.partition_point(|&v| v < a);
        if k == self.values.len() {
            self.grid.domain_sup()
        } else {
            self.grid.points()[k]
        }
    }

    /// `sup{a in [0, 1] : G<-(a) <= y} v 0`.
    ///
    /// Evaluated from the left-inverse alone: the set `{a : G<-(a) <= y}` is
    /// an interval starting at 0 whose right end is either a value of `G` or 1,
    /// so the supremum is the largest such candidate that qualifies.
    pub fn right_inverse(&self, y: f64) -> f64 {
        std::iter::once(1.0)
            .chain(self.values.iter().copied())
            .filter(|&a| self.left_inverse(a) <= y)
            .fold(0.0, f64::max)
    }

    /// Distinct levels of the function, i.e. the probability levels at which
    /// its left-inverse can change.
    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, v)| *i == 0 || self.values[i - 1] != **v)
            .map(|(_, v)| *v)
    }

    /// Sup-norm distance on the common grid.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}
