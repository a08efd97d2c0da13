//! Homotopy runs: vertex oracle, feasibility, determinism, edge model sizes
//! and agreement with exhaustive search.

mod common;

use combss_glm::optimizer::{lmo, refit, HomotopySchedule};
use combss_glm::relaxation::SelectionPoint;
use combss_glm::{run, Dataset, Error, Family, OptimizerConfig, RefitPenalty};
use common::*;
use proptest::prelude::*;

fn sort_oracle(g: &[f64], k: usize) -> Vec<bool> {
    let mut idx: Vec<usize> = (0..g.len()).collect();
    idx.sort_by(|&a, &b| g[a].partial_cmp(&g[b]).unwrap().then(a.cmp(&b)));
    let mut out = vec![false; g.len()];
    for &i in &idx[..k] {
        out[i] = true;
    }
    out
}

proptest! {
    #[test]
    fn lmo_matches_full_sort(g in prop::collection::vec((-50i32..50).prop_map(|v| f64::from(v) / 7.0), 1000)) {
        prop_assert_eq!(lmo(&g, 20).unwrap(), sort_oracle(&g, 20));
    }

    #[test]
    fn lmo_output_has_k_ones(g in prop::collection::vec(-1.0f64..0.0, 1..60), k in 1usize..60) {
        let k = k.min(g.len());
        let s = lmo(&g, k).unwrap();
        prop_assert_eq!(s.iter().filter(|&&b| b).count(), k);
    }

    #[test]
    fn frank_wolfe_steps_stay_feasible(p in 2usize..30, seed in 0u64..1000, alpha in 0.001f64..0.999) {
        let k = 1 + (seed as usize) % p;
        let mut t = SelectionPoint::centroid(p, k).unwrap();
        let g: Vec<f64> = (0..p).map(|j| -(((j as u64 * 2654435761 + seed) % 97) as f64)).collect();
        for _ in 0..50 {
            let s = lmo(&g, k).unwrap();
            t.step_toward(&s, alpha);
            prop_assert!(t.is_feasible(1e-9));
        }
    }
}

#[test]
fn lmo_rejects_bad_input() {
    assert!(lmo(&[0.0, f64::NAN], 1).is_err());
    assert!(lmo(&[0.0], 0).is_err());
    assert!(lmo(&[0.0], 2).is_err());
}

#[test]
fn schedule_is_non_decreasing_and_pinned() {
    let s = HomotopySchedule::new(1e-4, 0.3, 25).unwrap();
    let d = s.deltas();
    assert_eq!(d.len(), 50);
    assert!(d.windows(2).all(|w| w[0] <= w[1]));
    assert!(d[24..].iter().all(|&v| v == 0.3));
}

#[test]
fn run_returns_k_columns_and_a_feasible_final_point() {
    let data = logistic_instance(120, 15, 4, 3);
    for k in [1, 4, 9] {
        let res = run(
            &data,
            Family::Logistic,
            &OptimizerConfig {
                k,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(res.selected().len(), k);
        let t = SelectionPoint::new(res.diagnostics.final_t.clone(), k).unwrap();
        assert!(t.is_feasible(1e-9));
        assert_eq!(res.diagnostics.deltas.len(), 50);
        assert_eq!(res.refit.coefficients.nrows(), k);
    }
}

#[test]
fn runs_are_deterministic() {
    let data = multinomial_instance(100, 12, 3, 3, 8);
    let cfg = OptimizerConfig {
        k: 3,
        ..Default::default()
    };
    let a = run(&data, Family::Multinomial, &cfg).unwrap();
    let b = run(&data, Family::Multinomial, &cfg).unwrap();
    assert_eq!(a.support, b.support);
    assert_eq!(a.diagnostics.values.len(), b.diagnostics.values.len());
    assert!(a
        .diagnostics
        .values
        .iter()
        .zip(&b.diagnostics.values)
        .all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(a.refit, b.refit);
}

#[test]
fn full_model_size_selects_everything() {
    let data = logistic_instance(80, 6, 3, 1)
        .select_columns(&[0, 1, 2, 3, 4, 5], 2)
        .unwrap();
    let res = run(
        &data,
        Family::Logistic,
        &OptimizerConfig {
            k: 4,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(res.support.iter().all(|&s| s));
    assert_eq!(res.refit.columns, vec![0, 1, 2, 3, 4, 5]);
}

#[test]
fn invalid_model_size_is_a_validation_error() {
    let data = logistic_instance(50, 5, 2, 1);
    for k in [0, 6] {
        let err = run(
            &data,
            Family::Logistic,
            &OptimizerConfig {
                k,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { field: "k", .. }));
        assert!(err.to_string().contains("1 <= k"));
    }
}

#[test]
fn zero_column_is_reported_with_its_index() {
    let data = logistic_instance(30, 4, 2, 1);
    let mut x = data.design().clone();
    x.column_mut(2).fill(0.0);
    let bad = data.with_design(x).unwrap();
    let err = run(
        &bad,
        Family::Logistic,
        &OptimizerConfig {
            k: 2,
            ..Default::default()
        },
    )
    .unwrap_err();
    assert!(matches!(err, Error::ZeroColumn { index: 2 }));
}

#[test]
fn mandatory_columns_stay_in_the_refit() {
    let data = logistic_instance(150, 10, 3, 12);
    let order: Vec<usize> = vec![9, 8, 0, 1, 2, 3, 4, 5, 6, 7];
    let with_m = data.select_columns(&order, 2).unwrap();
    let res = run(
        &with_m,
        Family::Logistic,
        &OptimizerConfig {
            k: 3,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(&res.refit.columns[..2], &[0, 1]);
    assert_eq!(res.support.len(), 8);
    assert_eq!(res.selected(), vec![0, 1, 2]);
}

#[test]
fn cross_validated_refit_picks_a_grid_level() {
    let data = logistic_instance(100, 8, 3, 2);
    let cfg = OptimizerConfig {
        k: 3,
        refit: RefitPenalty::CrossValidated { folds: 5, seed: 1 },
        ..Default::default()
    };
    let res = run(&data, Family::Logistic, &cfg).unwrap();
    assert!(combss_glm::optimizer::REFIT_LAMBDA_GRID.contains(&res.refit.lambda));
}

fn best_subset(data: &Dataset, k: usize) -> (Vec<bool>, f64) {
    let p = data.p();
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 0u32..(1 << p) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let s: Vec<bool> = (0..p).map(|j| mask >> j & 1 == 1).collect();
        let obj = refit(data, Family::Logistic, &s, 0.0).unwrap().objective;
        if obj < best.1 {
            best = (s, obj);
        }
    }
    best
}

#[test]
fn close_to_exhaustive_search_on_small_problems() {
    let mut exact = 0;
    for seed in 0..6 {
        let data = logistic_instance(150, 8, 3, 500 + seed);
        let res = run(
            &data,
            Family::Logistic,
            &OptimizerConfig {
                k: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let (support, obj) = best_subset(&data, 3);
        assert!(res.refit.objective <= obj * 1.01, "seed {seed}");
        exact += usize::from(res.support == support);
    }
    assert!(exact >= 5);
}
