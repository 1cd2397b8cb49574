use proptest::prelude::*;
use qeband_core::estimate::{counterfactual, dr_fit, poisson_cdf, DrModel, GroupEstimator};
use qeband_core::resample::stream_rng;
use qeband_core::{Dataset, DesignSpec, Estimator, Grid, LinkFunction};
use rand::Rng;

const BINARY_LINKS: [LinkFunction; 3] = [LinkFunction::Logit, LinkFunction::Probit, LinkFunction::Linear];

/// `P(Y <= y)` for Poisson(`lambda`) by summing the pmf recursion.
fn poisson_cdf_oracle(lambda: f64, y: u32) -> f64 {
    let mut pmf = (-lambda).exp();
    let mut sum = pmf;
    for k in 1..=y {
        pmf *= lambda / f64::from(k);
        sum += pmf;
    }
    sum.min(1.0)
}

fn weighted_edf(y: &[f64], w: &[f64], grid: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    grid.iter()
        .map(|&t| y.iter().zip(w).filter(|(v, _)| **v <= t).map(|(_, w)| w).sum::<f64>() / total)
        .collect()
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Counts on `0..=6` whose law shifts with a numeric covariate.
fn count_sample(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = stream_rng(seed, 0);
    (0..n)
        .map(|_| {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y = (0..6).filter(|_| rng.random_bool(0.4 + 0.2 * x)).count() as f64;
            (y, x)
        })
        .unzip()
}

fn numeric_dataset(y: Vec<f64>, x: &[f64]) -> Dataset {
    let n = y.len();
    Dataset::new(y, vec!["x".into()], x.iter().map(|&v| vec![v]).collect(), vec![String::new(); n], None, None).unwrap()
}

fn numeric_spec() -> DesignSpec {
    DesignSpec {
        numeric: vec!["x".into()],
        ..DesignSpec::intercept_only()
    }
}

fn is_distribution(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1]) && v.iter().all(|p| (0.0..=1.0).contains(p))
}

proptest! {
    #[test]
    fn poisson_cdf_matches_pmf_sum(lambda in 0.001f64..50.0, y in 0u32..=500) {
        let got = poisson_cdf(lambda, f64::from(y));
        let oracle = poisson_cdf_oracle(lambda, y);
        prop_assert!((got - oracle).abs() <= 1e-12 + 1e-10 * oracle, "lambda {} y {}: {} vs {}", lambda, y, got, oracle);
    }

    #[test]
    fn poisson_cdf_floors_non_integer_arguments(lambda in 0.01f64..50.0, y in 0.0f64..100.0) {
        prop_assert_eq!(poisson_cdf(lambda, y), poisson_cdf(lambda, y.floor()));
    }

    #[test]
    fn intercept_only_fit_is_the_weighted_edf(
        data in prop::collection::vec((0u8..5, 0.1f64..3.0), 10..60),
    ) {
        let (y, w): (Vec<f64>, Vec<f64>) = data.into_iter().map(|(y, w)| (f64::from(y), w)).unzip();
        let n = y.len();
        let dataset = Dataset::new(y.clone(), vec![], vec![vec![]; n], vec![String::new(); n], None, None).unwrap();
        let grid = Grid::integers(0, 4).unwrap();
        let rows: Vec<usize> = (0..n).collect();
        let oracle = weighted_edf(&y, &w, grid.points());
        for link in BINARY_LINKS {
            let est = GroupEstimator::new(Estimator::Dr(link), &dataset, &rows, &grid, &DesignSpec::intercept_only()).unwrap();
            let got = est.evaluate(&w).unwrap();
            prop_assert!(sup_dist(&got, &oracle) < 1e-8, "{}: {:?} vs {:?}", link, got, oracle);
        }
        let mean = y.iter().zip(&w).map(|(y, w)| y * w).sum::<f64>() / w.iter().sum::<f64>();
        let est = GroupEstimator::new(Estimator::Poisson, &dataset, &rows, &grid, &DesignSpec::intercept_only()).unwrap();
        let got = est.evaluate(&w).unwrap();
        let oracle: Vec<f64> = (0..5).map(|t| poisson_cdf_oracle(mean, t)).collect();
        prop_assert!(sup_dist(&got, &oracle) < 1e-8, "poisson: {:?} vs {:?}", got, oracle);
    }

    #[test]
    fn saturated_fit_reproduces_cell_edfs(
        data in prop::collection::vec((0u8..4, 0u8..3, 0u8..2), 30..90),
        link_index in 0usize..3,
    ) {
        let link = BINARY_LINKS[link_index];
        let n = data.len();
        let y: Vec<f64> = data.iter().map(|d| f64::from(d.0)).collect();
        let x: Vec<Vec<f64>> = data.iter().map(|d| vec![f64::from(d.1), f64::from(d.2)]).collect();
        let dataset = Dataset::new(y.clone(), vec!["x1".into(), "x2".into()], x.clone(), vec![String::new(); n], None, None).unwrap();
        let grid = Grid::integers(0, 3).unwrap();
        let rows: Vec<usize> = (0..n).collect();
        let fit = dr_fit(&dataset, &rows, &grid, link, &DesignSpec::saturated(&["x1", "x2"])).unwrap();
        let cells: std::collections::BTreeSet<(u8, u8)> = data.iter().map(|d| (d.1, d.2)).collect();
        for cell in cells {
            let cy: Vec<f64> = data.iter().filter(|d| (d.1, d.2) == cell).map(|d| f64::from(d.0)).collect();
            let oracle = weighted_edf(&cy, &vec![1.0; cy.len()], grid.points());
            let got = fit.predict(&[f64::from(cell.0), f64::from(cell.1)]).unwrap();
            prop_assert!(sup_dist(got.values(), &oracle) < 1e-8, "{} cell {:?}: {:?} vs {:?}", link, cell, got.values(), oracle);
        }
    }

    #[test]
    fn predictions_are_distribution_functions(seed in any::<u64>(), n in 20usize..80, probe in -2.0f64..2.0) {
        let (y, x) = count_sample(n, seed);
        let dataset = numeric_dataset(y, &x);
        let grid = Grid::integers(0, 6).unwrap();
        let rows: Vec<usize> = (0..n).collect();
        for link in BINARY_LINKS {
            let fit = dr_fit(&dataset, &rows, &grid, link, &numeric_spec()).unwrap();
            let f = fit.predict(&[probe]).unwrap();
            prop_assert!(is_distribution(f.values()), "{}: {:?}", link, f.values());
            let cf = counterfactual(&fit, dataset.covariate_rows().iter().map(Vec::as_slice), None).unwrap();
            prop_assert!(is_distribution(cf.values()), "{}: {:?}", link, cf.values());
        }
        let model = DrModel::new(&dataset, &rows, &numeric_spec()).unwrap();
        let fit = model.fit_poisson(&vec![1.0; n], &grid).unwrap();
        prop_assert!(is_distribution(fit.predict(&[probe]).unwrap().values()));
    }

    #[test]
    fn counterfactual_is_linear_in_covariate_weights(seed in any::<u64>(), alpha in 0.0f64..=1.0) {
        let n = 60;
        let (y, x) = count_sample(n, seed);
        let dataset = numeric_dataset(y, &x);
        let grid = Grid::integers(0, 6).unwrap();
        let rows: Vec<usize> = (0..n).collect();
        let fit = dr_fit(&dataset, &rows, &grid, LinkFunction::Logit, &numeric_spec()).unwrap();
        let mut rng = stream_rng(seed, 1);
        let normalized = |w: Vec<f64>| {
            let total: f64 = w.iter().sum();
            w.into_iter().map(|v| v / total).collect::<Vec<f64>>()
        };
        let w1 = normalized((0..n).map(|_| rng.random_range(0.1..2.0)).collect());
        let w2 = normalized((0..n).map(|_| rng.random_range(0.1..2.0)).collect());
        let mix: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        let cf = |w: &[f64]| counterfactual(&fit, dataset.covariate_rows().iter().map(Vec::as_slice), Some(w)).unwrap();
        let (f1, f2, fm) = (cf(&w1), cf(&w2), cf(&mix));
        let combined: Vec<f64> = f1.values().iter().zip(f2.values()).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        prop_assert!(sup_dist(fm.values(), &combined) < 1e-12);
    }
}

#[test]
fn estimator_names_round_trip() {
    for name in ["edf", "poisson", "dr:logit", "dr:probit", "dr:linear", "dr:gamma-incomplete"] {
        let e: Estimator = name.parse().unwrap();
        assert_eq!(e.to_string(), name);
    }
    assert!("dr:cauchit".parse::<Estimator>().is_err());
    assert!("quantile".parse::<Estimator>().is_err());
}
