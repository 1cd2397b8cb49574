//! Band types: DF-bands, quantile bands and quantile-effect bands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ProbGrid};
use crate::stepfn::MonotoneStepFn;

/// A pair of nondecreasing functions `L <= U` together with its nominal
/// level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DFBand {
    lower: MonotoneStepFn,
    upper: MonotoneStepFn,
    level: f64,
}

impl DFBand {
    pub fn new(lower: MonotoneStepFn, upper: MonotoneStepFn, level: f64) -> Result<Self> {
        if lower.grid() != upper.grid() {
            return Err(Error::GridMismatch);
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidInput(format!("level {level} is outside (0, 1)")));
        }
        for (index, (&l, &u)) in lower.values().iter().zip(upper.values()).enumerate() {
            if l > u {
                return Err(Error::CrossedBand {
                    index,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(Self {
            lower,
            upper,
            level,
        })
    }

    pub fn lower(&self) -> &MonotoneStepFn {
        &self.lower
    }

    pub fn upper(&self) -> &MonotoneStepFn {
        &self.upper
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn grid(&self) -> &Grid {
        self.lower.grid()
    }

    /// `||U - L||_inf`.
    pub fn max_width(&self) -> f64 {
        self.lower.sup_distance(&self.upper).unwrap_or(f64::NAN)
    }

    /// Every distinct level of either edge.
    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.lower.levels().chain(self.upper.levels())
    }
}

/// Whether `band` contains `f` at every grid point.
pub fn covers(band: &DFBand, f: &MonotoneStepFn) -> Result<bool> {
    if band.grid() != f.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(band
        .lower
        .values()
        .iter()
        .zip(band.upper.values())
        .zip(f.values())
        .all(|((l, u), v)| l <= v && v <= u))
}

/// Per-probability-index intervals, optionally narrowed to a finite set of
/// admissible values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBand {
    prob_grid: ProbGrid,
    lo: Vec<f64>,
    hi: Vec<f64>,
    admissible: Option<Vec<Vec<f64>>>,
}

impl IntervalBand {
    pub fn new(
        prob_grid: ProbGrid,
        lo: Vec<f64>,
        hi: Vec<f64>,
        admissible: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n = prob_grid.len();
        if lo.len() != n || hi.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} / {} interval ends for {} probability indices",
                lo.len(),
                hi.len(),
                n
            )));
        }
        if let Some(index) = lo.iter().zip(&hi).position(|(l, h)| !(l <= h)) {
            return Err(Error::CrossedBand {
                index,
                lower: lo[index],
                upper: hi[index],
            });
        }
        if let Some(sets) = &admissible {
            if sets.len() != n {
                return Err(Error::InvalidInput("admissible sets do not match grid".into()));
            }
            for (i, set) in sets.iter().enumerate() {
                if set.iter().any(|v| *v < lo[i] || *v > hi[i]) {
                    return Err(Error::InvalidInput(format!(
                        "admissible set at index {i} leaves [{}, {}]",
                        lo[i], hi[i]
                    )));
                }
            }
        }
        Ok(Self {
            prob_grid,
            lo,
            hi,
            admissible,
        })
    }

    pub fn prob_grid(&self) -> &ProbGrid {
        &self.prob_grid
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.lo[i], self.hi[i])
    }

    pub fn admissible(&self) -> Option<&[Vec<f64>]> {
        self.admissible.as_deref()
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    /// Indices whose admissible set is empty.
    pub fn empty_indices(&self) -> Vec<usize> {
        self.admissible
            .as_ref()
            .map(|s| {
                s.iter()
                    .enumerate()
                    .filter(|(_, v)| v.is_empty())
                    .map(|(i, _)| i)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Whether `target(a_i)` lies in the band at every index, using the
    /// admissible sets when present and nonempty.
    pub fn contains_fn<F: Fn(f64) -> f64>(&self, target: F) -> bool {
        self.prob_grid
            .indices()
            .iter()
            .enumerate()
            .all(|(i, &a)| self.contains_at(i, target(a)))
    }

    pub fn contains_at(&self, i: usize, v: f64) -> bool {
        if !(self.lo[i] <= v && v <= self.hi[i]) {
            return false;
        }
        match self.admissible.as_ref().map(|s| &s[i]) {
            Some(set) if !set.is_empty() => set.contains(&v),
            _ => true,
        }
    }

    /// Mean of `hi - lo` over the probability grid.
    pub fn mean_length(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).sum::<f64>() / self.lo.len() as f64
    }
}

/// Band for a quantile function: per index `a`, `[U<-(a), L<-(a)]`.
pub type QuantileBand = IntervalBand;

/// Band for a quantile-effect (difference or ratio) function.
pub type QEBand = IntervalBand;
