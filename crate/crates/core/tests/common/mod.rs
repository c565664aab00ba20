#![allow(dead_code)]

use bayes_vfm::data::StandardizationStats;
use bayes_vfm::model::{Observation, NUM_FEATURES};
use bayes_vfm::stats::Rng;
use rand::Rng as _;
use rand_distr::StandardNormal;

pub fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn normals(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

pub fn random_x(rng: &mut Rng) -> [f64; NUM_FEATURES] {
    let mut x = [0.0; NUM_FEATURES];
    for v in x.iter_mut() {
        *v = normal(rng);
    }
    x
}

/// Observations `y = f(x) + sd * eps` with standard-normal inputs.
pub fn toy_data(rng: &mut Rng, n: usize, sd: f64, f: impl Fn(&[f64; NUM_FEATURES]) -> f64) -> Vec<Observation> {
    (0..n)
        .map(|_| {
            let x = random_x(rng);
            let y = f(&x) + sd * normal(rng);
            Observation { x, y }
        })
        .collect()
}

/// Stats that leave features and targets unchanged.
pub fn identity_stats() -> StandardizationStats {
    StandardizationStats {
        feature_mean: [0.0; NUM_FEATURES],
        feature_std: [1.0; NUM_FEATURES],
        target_mean: 0.0,
        target_std: 1.0,
    }
}

/// Trapezoid rule for `E[h(zeta)]`, `zeta ~ N(0, 1)`, on `[-10, 10]`.
pub fn gauss_expect(n: usize, mut h: impl FnMut(f64) -> f64) -> f64 {
    let (lo, hi) = (-10.0, 10.0);
    let step = (hi - lo) / (n - 1) as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    (0..n)
        .map(|i| {
            let z = lo + step * i as f64;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * step * norm * (-0.5 * z * z).exp() * h(z)
        })
        .sum()
}

/// Two-dimensional version of `gauss_expect` for independent standard normals.
pub fn gauss_expect_2d(n: usize, mut h: impl FnMut(f64, f64) -> f64) -> f64 {
    let (lo, hi) = (-10.0, 10.0);
    let step = (hi - lo) / (n - 1) as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let nodes: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let z = lo + step * i as f64;
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            (z, w * step * norm * (-0.5 * z * z).exp())
        })
        .collect();
    let mut total = 0.0;
    for &(a, wa) in &nodes {
        for &(b, wb) in &nodes {
            total += wa * wb * h(a, b);
        }
    }
    total
}

pub fn sample_moments(v: &[f64]) -> (f64, f64, f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let c = |k: i32| v.iter().map(|x| (x - m).powi(k)).sum::<f64>() / n;
    let var = c(2);
    (m, var, c(3) / var.powf(1.5), c(4) / (var * var) - 3.0)
}
