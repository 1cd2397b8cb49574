use proptest::prelude::*;
use qeband_core::shape::{clip_unit, intersect_monotone, isotonize, rearrange, shape_values};
use qeband_core::ShapeMode;

const MODES: [ShapeMode; 4] = [
    ShapeMode::Rearrange,
    ShapeMode::Isotonize,
    ShapeMode::Mix { isotonic_weight: 0.5 },
    ShapeMode::Mix { isotonic_weight: 0.2 },
];

const TOL: f64 = 1e-12;

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn is_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

/// Least-squares isotonic fit by the max-min formula over block means.
fn isotonic_oracle(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mean = |s: usize, t: usize| f[s..=t].iter().sum::<f64>() / (t - s + 1) as f64;
    (0..n)
        .map(|i| {
            (0..=i)
                .map(|s| (i..n).map(|t| mean(s, t)).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn raw_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.2f64..1.2, 1..30)
}

fn monotone_values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

#[test]
fn mix_example() {
    let f = [0.3, 0.1, 0.5];
    let sorted = [0.1, 0.3, 0.5];
    let pooled = isotonic_oracle(&f);
    let expected: Vec<f64> = sorted.iter().zip(&pooled).map(|(r, i)| 0.5 * r + 0.5 * i).collect();
    let got = shape_values(&f, ShapeMode::Mix { isotonic_weight: 0.5 });
    assert!(sup_dist(&got, &expected) < TOL, "{got:?}");
    assert!(sup_dist(&got, &[0.15, 0.25, 0.5]) < TOL, "{got:?}");
}

proptest! {
    #[test]
    fn rearrange_is_sorting(f in raw_values()) {
        let mut sorted = f.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(rearrange(&f), sorted);
    }

    #[test]
    fn isotonize_matches_max_min_oracle(f in raw_values()) {
        let got = isotonize(&f);
        let oracle = isotonic_oracle(&f);
        prop_assert!(sup_dist(&got, &oracle) < 1e-12, "{:?} vs {:?}", got, oracle);
    }

    #[test]
    fn outputs_are_distribution_values(f in raw_values()) {
        for mode in MODES {
            let g = shape_values(&clip_unit(&f), mode);
            prop_assert!(is_monotone(&g), "{:?}", mode);
            prop_assert!(g.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn monotone_input_is_left_unchanged(f in (1usize..30).prop_flat_map(monotone_values)) {
        for mode in MODES {
            prop_assert_eq!(shape_values(&f, mode), f.clone());
        }
    }

    #[test]
    fn shaping_is_a_sup_norm_contraction(
        pair in (1usize..30).prop_flat_map(|n| (prop::collection::vec(-0.2f64..1.2, n), prop::collection::vec(-0.2f64..1.2, n)))
    ) {
        let (f, g) = pair;
        let (f, g) = (clip_unit(&f), clip_unit(&g));
        for mode in MODES {
            let d = sup_dist(&shape_values(&f, mode), &shape_values(&g, mode));
            prop_assert!(d <= sup_dist(&f, &g) + TOL, "{:?}", mode);
        }
    }

    #[test]
    fn shaping_moves_closer_to_any_distribution_function(
        pair in (1usize..30).prop_flat_map(|n| (prop::collection::vec(-0.2f64..1.2, n), monotone_values(n)))
    ) {
        let (f, truth) = pair;
        let f = clip_unit(&f);
        for mode in MODES {
            prop_assert!(sup_dist(&shape_values(&f, mode), &truth) <= sup_dist(&f, &truth) + TOL, "{:?}", mode);
        }
    }

    #[test]
    fn shaping_preserves_order_and_does_not_widen(
        pair in (1usize..30).prop_flat_map(|n| (prop::collection::vec(-0.2f64..1.2, n), prop::collection::vec(0.0f64..0.3, n)))
    ) {
        let (l, gap) = pair;
        let u: Vec<f64> = l.iter().zip(&gap).map(|(a, g)| a + g).collect();
        let (l, u) = (clip_unit(&l), clip_unit(&u));
        let width = u.iter().zip(&l).map(|(a, b)| a - b).fold(0.0, f64::max);
        for mode in MODES {
            let (sl, su) = (shape_values(&l, mode), shape_values(&u, mode));
            prop_assert!(sl.iter().zip(&su).all(|(a, b)| *a <= *b + TOL), "{:?}", mode);
            let shaped = su.iter().zip(&sl).map(|(a, b)| a - b).fold(0.0, f64::max);
            prop_assert!(shaped <= width + TOL, "{:?}", mode);
        }
    }

    #[test]
    fn intersection_keeps_every_enclosed_distribution_function(
        triple in (1usize..30).prop_flat_map(|n| (monotone_values(n), prop::collection::vec(0.0f64..0.3, n), prop::collection::vec(0.0f64..0.3, n)))
    ) {
        let (truth, below, above) = triple;
        let l: Vec<f64> = truth.iter().zip(&below).map(|(t, d)| t - d).collect();
        let u: Vec<f64> = truth.iter().zip(&above).map(|(t, d)| t + d).collect();
        let (il, iu) = intersect_monotone(&l, &u).expect("enclosing a monotone function");
        prop_assert!(is_monotone(&il) && is_monotone(&iu));
        for i in 0..truth.len() {
            prop_assert!(il[i] <= truth[i] && truth[i] <= iu[i]);
            prop_assert!(l[i] <= il[i] && iu[i] <= u[i]);
        }
    }
}
