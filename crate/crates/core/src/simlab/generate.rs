use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Cumulative category masses of the default ordered design.
pub const ORDERED_CUMULATIVE: [f64; 5] = [0.1, 0.26, 0.5, 0.74, 0.9];

/// Latent-scale cutoffs `Phi^{-1}` of [`ORDERED_CUMULATIVE`].
pub fn default_cutoffs() -> Vec<f64> {
    let normal = Normal::standard();
    ORDERED_CUMULATIVE.iter().map(|&p| normal.inverse_cdf(p)).collect()
}

/// `n` draws from Poisson(`lambda`).
pub fn gen_poisson<R: Rng + ?Sized>(lambda: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidDesign(format!("Poisson rate must be positive, got {lambda}")));
    }
    let dist = Poisson::new(lambda)
        .map_err(|e| Error::InvalidDesign(format!("Poisson rate {lambda}: {e}")))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

/// `n` ordered outcomes: the number of `cutoffs` lying below a latent
/// N(`mu`, 1) draw.
pub fn gen_ordered<R: Rng + ?Sized>(mu: f64, cutoffs: &[f64], n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample::<f64, _>(StandardNormal) + mu;
            cutoffs.partition_point(|&c| c < z) as f64
        })
        .collect()
}

/// Population DF of the ordered outcome at `0..=cutoffs.len()`.
pub fn ordered_cdf(mu: f64, cutoffs: &[f64]) -> Vec<f64> {
    let normal = Normal::standard();
    cutoffs
        .iter()
        .map(|&c| normal.cdf(c - mu))
        .chain(std::iter::once(1.0))
        .collect()
}
