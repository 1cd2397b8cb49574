use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stepfn::MonotoneStepFn;

/// Weighted empirical distribution function on `grid`:
/// `F(y) = sum w_i 1{Y_i <= y} / sum w_i`.
pub fn edf(outcome: &[f64], weights: &[f64], grid: &Grid) -> Result<MonotoneStepFn> {
    let values = EdfBinning::new(outcome, grid).evaluate(weights)?;
    Ok(MonotoneStepFn::from_parts_unchecked(grid.clone(), values))
}

/// Precomputed grid bins for repeated weighted EDF evaluation of one
/// sample, as in a bootstrap loop.
#[derive(Debug, Clone)]
pub struct EdfBinning {
    grid: Grid,
    /// First grid index counting each observation; `len` means above the grid.
    bins: Vec<usize>,
}

impl EdfBinning {
    pub fn new(outcome: &[f64], grid: &Grid) -> Self {
        let bins = outcome
            .iter()
            .map(|&y| grid.bin_of(y).unwrap_or(grid.len()))
            .collect();
        Self {
            grid: grid.clone(),
            bins,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn evaluate(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.grid.len()];
        self.evaluate_into(weights, &mut out)?;
        Ok(out)
    }

    /// Writes the weighted EDF into `out`. Every observation at or below the
    /// last grid point lands in the final cumulative sum, so the last value
    /// is exactly 1 when nothing lies above the grid.
    pub fn evaluate_into(&self, weights: &[f64], out: &mut [f64]) -> Result<()> {
        assert_eq!(weights.len(), self.bins.len(), "one weight per observation");
        assert_eq!(out.len(), self.grid.len());
        let t = self.grid.len();
        let mut mass = vec![0.0; t + 1];
        for (&b, &w) in self.bins.iter().zip(weights) {
            mass[b] += w;
        }
        let mut cum = 0.0;
        for k in 0..t {
            cum += mass[k];
            out[k] = cum;
        }
        let total = cum + mass[t];
        if !(total > 0.0) {
            return Err(Error::ZeroWeight);
        }
        for v in out.iter_mut() {
            *v = (*v / total).min(1.0);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edf_examples() {
        let grid = Grid::integers(0, 3).unwrap();
        let y = [0.0, 1.0, 1.0, 3.0];
        let f = edf(&y, &[1.0; 4], &grid).unwrap();
        assert_eq!(f.values(), &[0.25, 0.75, 0.75, 1.0]);

        let f = edf(&y, &[2.0, 1.0, 1.0, 0.0], &grid).unwrap();
        assert_eq!(f.values(), &[0.5, 1.0, 1.0, 1.0]);

        let f = edf(&[2.0], &[1.0], &grid).unwrap();
        assert_eq!(f.values(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn mass_above_grid_is_counted_in_total() {
        let grid = Grid::integers(0, 1).unwrap();
        let f = edf(&[0.0, 5.0], &[1.0, 1.0], &grid).unwrap();
        assert_eq!(f.values(), &[0.5, 0.5]);
    }

    #[test]
    fn zero_weight_errors() {
        let grid = Grid::integers(0, 1).unwrap();
        assert!(matches!(edf(&[0.0], &[0.0], &grid), Err(Error::ZeroWeight)));
    }

    #[test]
    fn exponential_like_weights_reach_exactly_one() {
        let grid = Grid::integers(0, 4).unwrap();
        let w = [0.137, 2.71, 0.0031, 1.9, 0.44];
        let f = edf(&[0.0, 1.0, 1.0, 2.0, 0.0], &w, &grid).unwrap();
        assert_eq!(f.values()[2], 1.0);
        assert_eq!(f.values()[4], 1.0);
    }
}
