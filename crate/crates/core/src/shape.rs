//! Monotonicity and range restrictions for raw distribution estimates and
//! band edges.
//!
//! The shaping operator clips a grid function into `[0, 1]` and then
//! monotonizes it. Rearrangement (sorting the values along the grid) is the
//! default monotonizer; isotonic regression and any convex mix of the two are
//! also available. Each is weakly contractive in the sup-norm, leaves
//! nondecreasing inputs untouched and preserves the pointwise order, which is
//! what makes shaped bands at least as good as the raw ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stepfn::MonotoneStepFn;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeMode {
    #[default]
    Rearrange,
    Isotonize,
    /// `(1 - w) * rearrange + w * isotonize`.
    Mix { isotonic_weight: f64 },
}

pub fn clip_unit(f: &[f64]) -> Vec<f64> {
    f.iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

/// Sorted values assigned to the grid in order.
pub fn rearrange(f: &[f64]) -> Vec<f64> {
    let mut v = f.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Least-squares projection onto nondecreasing sequences
/// (pool-adjacent-violators).
pub fn isotonize(f: &[f64]) -> Vec<f64> {
    // (block mean, block size)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(f.len());
    for &v in f {
        let mut cur = (v, 1usize);
        while let Some(&(m, n)) = blocks.last() {
            if m <= cur.0 {
                break;
            }
            blocks.pop();
            let total = n + cur.1;
            cur = ((m * n as f64 + cur.0 * cur.1 as f64) / total as f64, total);
        }
        blocks.push(cur);
    }
    let mut out = Vec::with_capacity(f.len());
    for (m, n) in blocks {
        out.extend(std::iter::repeat_n(m, n));
    }
    // Block means of a monotone block sequence can still tie-break the wrong
    // way by one ulp; a running max keeps the output nondecreasing.
    for i in 1..out.len() {
        if out[i] < out[i - 1] {
            out[i] = out[i - 1];
        }
    }
    out
}

/// Clip to `[0, 1]`, then monotonize according to `mode`.
pub fn shape_values(f: &[f64], mode: ShapeMode) -> Vec<f64> {
    let clipped = clip_unit(f);
    if clipped.windows(2).all(|w| w[0] <= w[1]) {
        return clipped;
    }
    match mode {
        ShapeMode::Rearrange => rearrange(&clipped),
        ShapeMode::Isotonize => isotonize(&clipped),
        ShapeMode::Mix { isotonic_weight: w } => {
            let r = rearrange(&clipped);
            let i = isotonize(&clipped);
            let mut out: Vec<f64> = r
                .iter()
                .zip(&i)
                .map(|(r, i)| ((1.0 - w) * r + w * i).clamp(0.0, 1.0))
                .collect();
            for k in 1..out.len() {
                if out[k] < out[k - 1] {
                    out[k] = out[k - 1];
                }
            }
            out
        }
    }
}

/// [`shape_values`] returning a member of the monotone class.
pub fn shape(grid: &Grid, f: &[f64], mode: ShapeMode) -> Result<MonotoneStepFn> {
    if f.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "{} values for a grid of {} points",
            f.len(),
            grid.len()
        )));
    }
    if f.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in function to be shaped".into()));
    }
    Ok(MonotoneStepFn::from_parts_unchecked(
        grid.clone(),
        shape_values(f, mode),
    ))
}

/// Intersection of a raw band with the monotone class: the upper edge becomes
/// the greatest nondecreasing minorant of the clipped upper edge, the lower
/// edge the smallest nondecreasing majorant of the clipped lower edge.
/// Returns `None` when the two cross.
pub fn intersect_monotone(lower: &[f64], upper: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    assert_eq!(lower.len(), upper.len());
    let mut lo = clip_unit(lower);
    let mut hi = clip_unit(upper);
    for i in 1..lo.len() {
        lo[i] = lo[i].max(lo[i - 1]);
    }
    for i in (0..hi.len().saturating_sub(1)).rev() {
        hi[i] = hi[i].min(hi[i + 1]);
    }
    lo.iter().zip(&hi).all(|(l, h)| l <= h).then_some((lo, hi))
}
