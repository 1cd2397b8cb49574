//! Exchangeable bootstrap: random observation weights shared across all
//! estimators of a draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::shape::{clip_unit, shape_values, ShapeMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// Empirical bootstrap: multinomial counts.
    Multinomial,
    /// Bayesian bootstrap: standard exponential weights.
    #[default]
    Exponential,
}

impl std::str::FromStr for WeightScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "multinomial" => Ok(Self::Multinomial),
            "exponential" => Ok(Self::Exponential),
            other => Err(format!("unknown weight scheme `{other}`")),
        }
    }
}

impl std::fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Multinomial => "multinomial",
            Self::Exponential => "exponential",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub scheme: WeightScheme,
    pub draws: usize,
    pub master_seed: u64,
    /// Column whose labels share a weight; recorded for provenance, the
    /// labels themselves are passed to [`draw_weights`].
    pub cluster_by: Option<String>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            scheme: WeightScheme::Exponential,
            draws: 1000,
            master_seed: 0,
            cluster_by: None,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.draws < 2 {
            return Err(Error::InvalidInput(format!(
                "at least 2 bootstrap draws are needed, got {}",
                self.draws
            )));
        }
        Ok(())
    }
}

/// Random stream `stream` of the generator keyed by `seed`. Streams of one
/// seed are independent, and each depends only on `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Weight vector of draw `b`.
///
/// `clusters` holds dense cluster ids (`0..m`) per observation; without it
/// every observation is its own cluster. Multinomial weights toss `m`
/// times over the clusters, exponential weights are i.i.d. per cluster, and
/// every member of a cluster receives its cluster's weight.
pub fn draw_weights(config: &BootstrapConfig, n: usize, clusters: Option<&[usize]>, b: usize) -> Vec<f64> {
    let mut rng = stream_rng(config.master_seed, b as u64);
    let m = match clusters {
        Some(ids) => {
            assert_eq!(ids.len(), n, "one cluster id per observation");
            ids.iter().max().map_or(0, |k| k + 1)
        }
        None => n,
    };
    let mut per_cluster = vec![0.0; m];
    match config.scheme {
        WeightScheme::Multinomial => {
            for _ in 0..m {
                per_cluster[rng.random_range(0..m)] += 1.0;
            }
        }
        WeightScheme::Exponential => {
            for w in &mut per_cluster {
                *w = rng.sample::<f64, _>(Exp1);
            }
        }
    }
    match clusters {
        Some(ids) => ids.iter().map(|&k| per_cluster[k]).collect(),
        None => per_cluster,
    }
}

/// Joint bootstrap draws of `K` DF estimators on a common grid, stored as a
/// flat `B x K x T` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDraws {
    values: Vec<f64>,
    draws: usize,
    groups: usize,
    points: usize,
    config: BootstrapConfig,
    /// `(k, t)` entries whose draws are all identical.
    degenerate: Vec<bool>,
}

impl BootstrapDraws {
    /// Assembles draws from per-draw `K x T` slices (already shaped).
    pub fn from_slices(config: BootstrapConfig, slices: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let draws = slices.len();
        let groups = slices.first().map_or(0, Vec::len);
        let points = slices.first().and_then(|s| s.first()).map_or(0, Vec::len);
        let mut values = Vec::with_capacity(draws * groups * points);
        for (b, slice) in slices.into_iter().enumerate() {
            if slice.len() != groups || slice.iter().any(|f| f.len() != points) {
                return Err(Error::InvalidInput(format!("draw {b} has a different shape")));
            }
            values.extend(slice.into_iter().flatten());
        }
        let mut degenerate = vec![true; groups * points];
        for b in 1..draws {
            for (j, d) in degenerate.iter_mut().enumerate() {
                if *d && values[b * groups * points + j] != values[j] {
                    *d = false;
                }
            }
        }
        Ok(Self {
            values,
            draws,
            groups,
            points,
            config,
            degenerate,
        })
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn config(&self) -> &BootstrapConfig {
        &self.config
    }

    pub fn get(&self, b: usize, k: usize, t: usize) -> f64 {
        self.values[(b * self.groups + k) * self.points + t]
    }

    /// Draw `b` of estimator `k` over the grid.
    pub fn slice(&self, b: usize, k: usize) -> &[f64] {
        let start = (b * self.groups + k) * self.points;
        &self.values[start..start + self.points]
    }

    /// All `B` draws at `(k, t)`.
    pub fn column(&self, k: usize, t: usize) -> Vec<f64> {
        (0..self.draws).map(|b| self.get(b, k, t)).collect()
    }

    pub fn is_degenerate(&self, k: usize, t: usize) -> bool {
        self.degenerate[k * self.points + t]
    }

    /// Keeps only the listed estimators, in the given order.
    pub fn select(&self, groups: &[usize]) -> Self {
        let slices = (0..self.draws)
            .map(|b| groups.iter().map(|&k| self.slice(b, k).to_vec()).collect())
            .collect();
        Self::from_slices(self.config.clone(), slices).expect("consistent shape")
    }
}

/// Runs `estimator` on `config.draws` weight vectors in parallel.
///
/// Every draw feeds one weight vector (length `n`) to the estimator, which
/// returns `K` DF value vectors on `grid`; these are clipped and shaped before
/// storage. Output does not depend on the thread count.
pub fn bootstrap_dfs<E>(
    estimator: E,
    n: usize,
    clusters: Option<&[usize]>,
    grid: &Grid,
    config: &BootstrapConfig,
    shape: ShapeMode,
) -> Result<BootstrapDraws>
where
    E: Fn(&[f64]) -> Result<Vec<Vec<f64>>> + Sync,
{
    config.validate()?;
    let results: Vec<Result<Vec<Vec<f64>>>> = (0..config.draws)
        .into_par_iter()
        .map(|b| {
            let w = draw_weights(config, n, clusters, b);
            let fs = estimator(&w).map_err(|e| Error::Draw {
                draw: b,
                source: Box::new(e),
            })?;
            fs.into_iter()
                .map(|f| {
                    if f.len() != grid.len() {
                        return Err(Error::GridMismatch);
                    }
                    Ok(shape_values(&clip_unit(&f), shape))
                })
                .collect()
        })
        .collect();
    let slices = results.into_iter().collect::<Result<Vec<_>>>()?;
    BootstrapDraws::from_slices(config.clone(), slices)
}
