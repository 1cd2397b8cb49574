use proptest::prelude::*;
use qeband_core::bandcalc::{critical_value, df_band_single, df_bands_joint, order_statistic, robust_se};
use qeband_core::resample::{bootstrap_dfs, draw_weights, stream_rng};
use qeband_core::{BandShaping, BootstrapConfig, BootstrapDraws, Grid, MonotoneStepFn, ShapeMode, WeightScheme};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

fn config(draws: usize, seed: u64) -> BootstrapConfig {
    BootstrapConfig {
        scheme: WeightScheme::Exponential,
        draws,
        master_seed: seed,
        cluster_by: None,
    }
}

/// Draws `[b][k][t]` of `groups` noisy copies of a fixed increasing function.
fn synthetic_draws(groups: usize, points: usize, draws: usize, seed: u64) -> (Vec<Vec<f64>>, BootstrapDraws) {
    let mut rng = stream_rng(seed, 0);
    let center: Vec<f64> = (1..=points).map(|t| t as f64 / (points + 1) as f64).collect();
    let estimates = vec![center.clone(); groups];
    let slices = (0..draws)
        .map(|_| {
            (0..groups)
                .map(|k| {
                    center
                        .iter()
                        .map(|c| c + 0.01 * (k + 1) as f64 * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect()
        })
        .collect();
    (estimates, BootstrapDraws::from_slices(config(draws, seed), slices).unwrap())
}

#[test]
fn order_statistic_is_the_ceiling_rank() {
    let v: Vec<f64> = (1..=100).rev().map(f64::from).collect();
    assert_eq!(order_statistic(&v, 0.95), 95.0);
    assert_eq!(order_statistic(&v, 0.951), 96.0);
    assert_eq!(order_statistic(&v, 0.0), 1.0);
    assert_eq!(order_statistic(&v, 1.0), 100.0);
}

#[test]
fn robust_se_of_one_to_hundred() {
    let v: Vec<f64> = (1..=100).map(f64::from).collect();
    let iqr_normal = 2.0 * Normal::standard().inverse_cdf(0.75);
    let expected = (75.0 - 25.0) / iqr_normal;
    assert!((robust_se(&v) - expected).abs() < 1e-9);
    assert!((robust_se(&v) - 37.06).abs() < 0.01);
}

#[test]
fn robust_se_of_standard_normal_draws_is_one() {
    let mut rng = stream_rng(7, 0);
    let v: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
    let s = robust_se(&v);
    assert!((s - 1.0).abs() < 0.02, "{s}");
}

#[test]
fn robust_se_of_constant_draws_is_zero() {
    assert_eq!(robust_se(&[0.3; 50]), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_critical_value_never_exceeds_joint(seed in any::<u64>(), groups in 2usize..4, points in 1usize..12) {
        let (estimates, draws) = synthetic_draws(groups, points, 200, seed);
        let all: Vec<usize> = (0..groups).collect();
        let joint = critical_value(&draws, &estimates, &all, 0.9).unwrap().critical_value;
        for k in 0..groups {
            let single = critical_value(&draws, &estimates, &[k], 0.9).unwrap().critical_value;
            prop_assert!(single <= joint);
        }
    }

    #[test]
    fn critical_value_is_nondecreasing_in_level(seed in any::<u64>(), points in 1usize..12) {
        let (estimates, draws) = synthetic_draws(1, points, 200, seed);
        let c: Vec<f64> = [0.5, 0.8, 0.9, 0.95, 0.99]
            .iter()
            .map(|&p| critical_value(&draws, &estimates, &[0], p).unwrap().critical_value)
            .collect();
        prop_assert!(c.windows(2).all(|w| w[0] <= w[1]), "{:?}", c);
    }

    #[test]
    fn joint_bands_contain_single_bands(seed in any::<u64>(), points in 2usize..12) {
        let (estimates, draws) = synthetic_draws(2, points, 200, seed);
        let grid = Grid::integers(0, points as i64 - 1).unwrap();
        let fns: Vec<MonotoneStepFn> = estimates.iter().map(|e| MonotoneStepFn::new(grid.clone(), e.clone()).unwrap()).collect();
        let (joint, _) = df_bands_joint(&fns, &draws, 0.9, BandShaping::default()).unwrap();
        for k in 0..2 {
            let (single, _) = df_band_single(&fns, &draws, k, 0.9, BandShaping::default()).unwrap();
            let (j, s) = (&joint[k].band, &single.band);
            for t in 0..points {
                prop_assert!(j.lower().values()[t] <= s.lower().values()[t]);
                prop_assert!(s.upper().values()[t] <= j.upper().values()[t]);
            }
        }
    }

    #[test]
    fn multinomial_weights_are_counts_summing_to_n(seed in any::<u64>(), n in 1usize..200, b in 0usize..50) {
        let c = BootstrapConfig { scheme: WeightScheme::Multinomial, ..config(10, seed) };
        let w = draw_weights(&c, n, None, b);
        prop_assert_eq!(w.len(), n);
        prop_assert!(w.iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
        prop_assert_eq!(w.iter().sum::<f64>(), n as f64);
    }

    #[test]
    fn cluster_members_share_a_weight(
        seed in any::<u64>(),
        ids in prop::collection::vec(0usize..6, 1..60),
        multinomial in any::<bool>(),
    ) {
        let mut dense = ids.clone();
        dense.sort();
        dense.dedup();
        let ids: Vec<usize> = ids.iter().map(|i| dense.binary_search(i).unwrap()).collect();
        let scheme = if multinomial { WeightScheme::Multinomial } else { WeightScheme::Exponential };
        let c = BootstrapConfig { scheme, ..config(10, seed) };
        let w = draw_weights(&c, ids.len(), Some(&ids), 3);
        for (i, a) in ids.iter().enumerate() {
            for (j, b) in ids.iter().enumerate() {
                if a == b {
                    prop_assert_eq!(w[i], w[j]);
                }
            }
        }
        if multinomial {
            let per_cluster: f64 = (0..dense.len()).map(|k| w[ids.iter().position(|&i| i == k).unwrap()]).sum();
            prop_assert_eq!(per_cluster, dense.len() as f64);
        } else {
            prop_assert!(w.iter().all(|v| *v > 0.0));
        }
    }
}

#[test]
fn draw_b_does_not_depend_on_the_number_of_draws() {
    let few = config(5, 11);
    let many = config(50, 11);
    for b in 0..5 {
        assert_eq!(draw_weights(&few, 30, None, b), draw_weights(&many, 30, None, b));
    }
    assert_ne!(draw_weights(&few, 30, None, 0), draw_weights(&few, 30, None, 1));
}

#[test]
fn bootstrap_does_not_depend_on_the_thread_count() {
    let y: Vec<f64> = (0..300).map(|i| f64::from((i * 7) % 11)).collect();
    let grid = Grid::integers(0, 10).unwrap();
    let bins = qeband_core::estimate::EdfBinning::new(&y, &grid);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            bootstrap_dfs(|w| Ok(vec![bins.evaluate(w)?]), y.len(), None, &grid, &config(64, 5), ShapeMode::Rearrange)
                .unwrap()
        })
    };
    let one = run(1);
    let four = run(4);
    for b in 0..64 {
        assert_eq!(one.slice(b, 0), four.slice(b, 0));
    }
}
