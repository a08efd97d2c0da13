#![allow(dead_code)]

use combss_glm::simbench::{generate, SimDesign};
use combss_glm::{Dataset, Family, SelectionPoint};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Logistic instance with `k0` unit signals and independent predictors.
pub fn logistic_instance(n: usize, p: usize, k0: usize, seed: u64) -> Dataset {
    generate(&SimDesign {
        n,
        p,
        k0,
        seed,
        test_size: 1,
        ..Default::default()
    })
    .unwrap()
    .train
}

pub fn multinomial_instance(n: usize, p: usize, k0: usize, classes: usize, seed: u64) -> Dataset {
    generate(&SimDesign {
        n,
        p,
        k0,
        seed,
        family: Family::Multinomial,
        classes,
        test_size: 1,
        ..Default::default()
    })
    .unwrap()
    .train
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Point with entries in `[lo, 1 - lo]` summing to `k`, found by shifting a
/// uniform draw and clipping.
pub fn interior_point(p: usize, k: usize, lo: f64, rng: &mut ChaCha8Rng) -> SelectionPoint {
    let u: Vec<f64> = (0..p).map(|_| rng.random_range(lo..1.0 - lo)).collect();
    let total = |s: f64| u.iter().map(|x| (x + s).clamp(lo, 1.0 - lo)).sum::<f64>();
    let (mut a, mut b) = (-1.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if total(mid) < k as f64 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let s = 0.5 * (a + b);
    SelectionPoint::new(u.iter().map(|x| (x + s).clamp(lo, 1.0 - lo)).collect(), k).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(a.abs()).max(1e-12)
}
