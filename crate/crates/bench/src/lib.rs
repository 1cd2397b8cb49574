//! Synthetic inputs shared by the benchmarks.

use qeband_core::resample::stream_rng;
use qeband_core::{BootstrapConfig, Dataset, DesignSpec, Grid, WeightScheme};
use rand::Rng;

/// Counts on `0..=max` drawn as binomials whose success rate rises with a
/// uniform covariate `x`.
pub fn count_dataset(n: usize, max: u32, seed: u64) -> Dataset {
    let mut rng = stream_rng(seed, 0);
    let (y, x): (Vec<f64>, Vec<Vec<f64>>) = (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y = (0..max).filter(|_| rng.random_bool(0.4 + 0.2 * x)).count() as f64;
            (y, vec![x])
        })
        .unzip();
    Dataset::new(y, vec!["x".into()], x, vec![String::new(); n], None, None).expect("consistent columns")
}

pub fn numeric_spec() -> DesignSpec {
    DesignSpec {
        numeric: vec!["x".into()],
        ..DesignSpec::intercept_only()
    }
}

pub fn count_grid(max: u32) -> Grid {
    Grid::integers(0, i64::from(max)).expect("nonempty range")
}

pub fn bootstrap(draws: usize) -> BootstrapConfig {
    BootstrapConfig {
        scheme: WeightScheme::Exponential,
        draws,
        master_seed: 1,
        cluster_by: None,
    }
}

/// Noisy nondecreasing-ish values in `[0, 1]`, as a raw band edge.
pub fn raw_edge(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    (0..len)
        .map(|t| (t as f64 / len as f64 + rng.random_range(-0.05..0.05)).clamp(0.0, 1.0))
        .collect()
}
