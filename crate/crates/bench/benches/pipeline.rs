use criterion::{black_box, criterion_group, criterion_main, Criterion};
use qeband_bench::{bootstrap, count_dataset, count_grid, numeric_spec, raw_edge};
use qeband_core::bandcalc::{critical_value, df_bands_joint, invert_bands, qe_band};
use qeband_core::estimate::{dr_fit, poisson_cdf, EdfBinning};
use qeband_core::resample::bootstrap_dfs;
use qeband_core::shape::{isotonize, rearrange};
use qeband_core::simlab::{run_replication, SimDesign, SimFamily};
use qeband_core::{BandShaping, LinkFunction, MonotoneStepFn, ProbGrid, ShapeMode};

fn shaping(c: &mut Criterion) {
    let f = raw_edge(1000, 3);
    c.bench_function("rearrange_1000", |b| b.iter(|| rearrange(black_box(&f))));
    c.bench_function("isotonize_1000", |b| b.iter(|| isotonize(black_box(&f))));
}

fn poisson(c: &mut Criterion) {
    c.bench_function("poisson_cdf_grid", |b| {
        b.iter(|| (0..200).map(|y| poisson_cdf(black_box(25.0), f64::from(y))).sum::<f64>())
    });
}

fn estimation(c: &mut Criterion) {
    let data = count_dataset(1000, 10, 5);
    let grid = count_grid(10);
    let rows: Vec<usize> = (0..data.len()).collect();
    let mut group = c.benchmark_group("dr_fit_n1000");
    for link in [LinkFunction::Logit, LinkFunction::Probit] {
        group.bench_function(link.to_string(), |b| {
            b.iter(|| dr_fit(&data, &rows, &grid, link, &numeric_spec()).unwrap())
        });
    }
    group.finish();
}

fn bands(c: &mut Criterion) {
    let data = count_dataset(1600, 10, 7);
    let grid = count_grid(10);
    let (head, tail) = data.outcome().split_at(800);
    let (bins_a, bins_b) = (EdfBinning::new(head, &grid), EdfBinning::new(tail, &grid));
    let config = bootstrap(500);
    let evaluate = |w: &[f64]| Ok(vec![bins_a.evaluate(&w[..800])?, bins_b.evaluate(&w[800..])?]);
    c.bench_function("bootstrap_dfs_edf_b500", |b| {
        b.iter(|| bootstrap_dfs(evaluate, data.len(), None, &grid, &config, ShapeMode::Rearrange).unwrap())
    });

    let draws = bootstrap_dfs(evaluate, data.len(), None, &grid, &config, ShapeMode::Rearrange).unwrap();
    let ones = vec![1.0; data.len()];
    let estimates: Vec<Vec<f64>> = evaluate(&ones).unwrap();
    c.bench_function("critical_value_joint", |b| {
        b.iter(|| critical_value(&draws, &estimates, &[0, 1], 0.95).unwrap())
    });

    let fns: Vec<MonotoneStepFn> = estimates
        .iter()
        .map(|e| MonotoneStepFn::new(grid.clone(), e.clone()).unwrap())
        .collect();
    let (built, _) = df_bands_joint(&fns, &draws, 0.95, BandShaping::default()).unwrap();
    let probs = ProbGrid::range(0.1, 0.9, 0.01).unwrap();
    c.bench_function("invert_bands_and_qe", |b| {
        b.iter(|| {
            let q = invert_bands(&[&built[0].band, &built[1].band], &probs);
            qe_band(&q[1], &q[0]).unwrap()
        })
    });
}

fn simulation(c: &mut Criterion) {
    let design = SimDesign::new(SimFamily::count_design(2).unwrap(), 400, 0.95, 1, 500, 11);
    c.bench_function("simulation_replication_n400_b500", |b| {
        b.iter(|| run_replication(&design, black_box(0)).unwrap())
    });
}

criterion_group!(benches, shaping, poisson, estimation, bands, simulation);
criterion_main!(benches);
