mod common;

use bayes_vfm::data::{generate_synthetic_well, SyntheticWellConfig};
use bayes_vfm::model::{
    absolute_noise_log_mean, forward_mean, he_prior, log_likelihood, log_likelihood_grad, noise_std,
    relative_noise_log_mean, Architecture, ModelSpec, NoiseSpec, Observation, SQRT_HALF_PI,
};
use bayes_vfm::stats::rng;
use common::{normal, normals, random_x, sample_moments, toy_data};
use proptest::prelude::*;

/// Plain matrix-vector forward pass over the documented weight layout.
fn oracle_forward(widths: &[usize], w: &[f64], x: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut off = 0;
    let layers = widths.len() - 1;
    for l in 0..layers {
        let (n_in, n_out) = (widths[l], widths[l + 1]);
        let mat = &w[off..off + n_in * n_out];
        let bias = &w[off + n_in * n_out..off + n_in * n_out + n_out];
        let mut out = vec![0.0; n_out];
        for j in 0..n_out {
            let mut s = bias[j];
            for i in 0..n_in {
                s += mat[j * n_in + i] * a[i];
            }
            out[j] = if l + 1 < layers { s.max(0.0) } else { s };
        }
        off += n_out * (n_in + 1);
        a = out;
    }
    a[0]
}

#[test]
fn forward_matches_matrix_oracle() {
    let arch = Architecture::default();
    let mut r = rng(11);
    let prior = he_prior(&arch, 0.1).unwrap();
    for _ in 0..20 {
        let w: Vec<f64> = prior.stds.iter().map(|s| s * normal(&mut r)).collect();
        let x = random_x(&mut r);
        let got = forward_mean(&x, &w, &arch).unwrap();
        let want = oracle_forward(arch.widths(), &w, &x);
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300), "{got} vs {want}");
    }
}

#[test]
fn zero_network_and_identity_chain() {
    let arch = Architecture::with_hidden(&[1]).unwrap();
    let zero = vec![0.0; arch.num_params()];
    assert_eq!(forward_mean(&[0.3; 7], &zero, &arch).unwrap(), 0.0);
    let mut w = zero.clone();
    w[0] = 1.0;
    w[8] = 1.0;
    let x = [0.5, 1.0, -2.0, 3.0, 0.1, 0.2, 0.3];
    assert_eq!(forward_mean(&x, &w, &arch).unwrap(), 0.5);
}

fn bias_free_weights(arch: &Architecture, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut w = normals(&mut r, arch.num_params());
    for l in arch.layers() {
        w[l.bias_offset..l.bias_offset + l.n_out].fill(0.0);
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relu_network_is_positively_homogeneous(seed in 0u64..1000, alpha in 0.01f64..100.0, depth in 1usize..4) {
        let arch = Architecture::with_hidden(&vec![9; depth]).unwrap();
        let w = bias_free_weights(&arch, seed);
        let x = random_x(&mut rng(seed + 1));
        let ax: Vec<f64> = x.iter().map(|v| alpha * v).collect();
        let f = forward_mean(&x, &w, &arch).unwrap();
        let fa = forward_mean(&ax, &w, &arch).unwrap();
        prop_assert!((fa - alpha * f).abs() <= 1e-10 * (alpha * f).abs().max(1e-8));
    }

    #[test]
    fn noise_std_is_positive(z in -1e3f64..1e3, p1 in -30f64..5.0, p2 in -30f64..5.0, offset in -10f64..10.0) {
        prop_assert!(noise_std(z, &[p1], &NoiseSpec::LearnedHomoscedastic).unwrap() > 0.0);
        let hetero = NoiseSpec::LearnedHeteroscedastic { offset };
        prop_assert!(noise_std(z, &[p1, p2], &hetero).unwrap() > 0.0);
    }
}

#[test]
fn noise_std_values() {
    assert_eq!(noise_std(7.0, &[0.0], &NoiseSpec::LearnedHomoscedastic).unwrap(), 1.0);
    let hetero = NoiseSpec::LearnedHeteroscedastic { offset: 0.0 };
    assert_eq!(noise_std(2.0, &[0.0, 0.0], &hetero).unwrap(), 3.0);
    let s = noise_std(-5.0, &[-30.0, 0.1f64.ln()], &hetero).unwrap();
    assert!((s - (0.5 + (-30.0f64).exp())).abs() < 1e-15);
}

#[test]
fn log_likelihood_closed_forms() {
    let arch = Architecture::with_hidden(&[3]).unwrap();
    let theta = vec![0.0; arch.num_params()];
    let fixed = ModelSpec::new(arch.clone(), NoiseSpec::FixedHomoscedastic { sigma: 2.0 }).unwrap();
    let one = [Observation { x: [0.0; 7], y: 2.0 }];
    let ll = log_likelihood(&one, &theta, &fixed).unwrap();
    assert!((ll - (-0.5 * (8.0 * std::f64::consts::PI).ln() - 0.5)).abs() < 1e-12);
    assert!((ll + 2.1121).abs() < 1e-4);

    let homo = ModelSpec::new(arch, NoiseSpec::LearnedHomoscedastic).unwrap();
    let mut theta = theta;
    theta.push(0.0);
    let zero = [Observation { x: [0.4; 7], y: 0.0 }];
    assert!((log_likelihood(&zero, &theta, &homo).unwrap() + 0.918_938_533_204_672_7).abs() < 1e-12);
    let many = vec![zero[0]; 25];
    let total = log_likelihood(&many, &theta, &homo).unwrap();
    assert!((total - 25.0 * log_likelihood(&zero, &theta, &homo).unwrap()).abs() < 1e-10);
}

#[test]
fn log_likelihood_gradient_matches_finite_differences() {
    let arch = Architecture::with_hidden(&[5]).unwrap();
    let specs = [
        ModelSpec::new(arch.clone(), NoiseSpec::FixedHomoscedastic { sigma: 0.3 }).unwrap(),
        ModelSpec::new(arch.clone(), NoiseSpec::LearnedHomoscedastic).unwrap(),
        ModelSpec::new(arch.clone(), NoiseSpec::LearnedHeteroscedastic { offset: 3.0 }).unwrap(),
    ];
    let mut r = rng(5);
    let data = toy_data(&mut r, 40, 0.2, |x| x[0].max(0.0) - 0.5 * x[1]);
    for spec in &specs {
        let mut theta: Vec<f64> = normals(&mut r, spec.num_params()).iter().map(|v| 0.5 * v).collect();
        let k = spec.num_weights();
        for p in theta[k..].iter_mut() {
            *p = -1.0 + 0.1 * *p;
        }
        let mut grad = vec![0.0; theta.len()];
        log_likelihood_grad(&data, &theta, spec, &mut grad).unwrap();
        let h = 1e-5;
        for i in 0..theta.len() {
            let mut tp = theta.clone();
            tp[i] += h;
            let mut tm = theta.clone();
            tm[i] -= h;
            let fd = (log_likelihood(&data, &tp, spec).unwrap() - log_likelihood(&data, &tm, spec).unwrap()) / (2.0 * h);
            let tol = 1e-4 * grad[i].abs().max(1.0);
            assert!((fd - grad[i]).abs() <= tol, "{:?} param {i}: {} vs {fd}", spec.noise, grad[i]);
        }
    }
}

/// Variance of f(x, phi) over prior draws of phi and standard-normal x.
fn prior_output_variance(depth: usize, seed: u64) -> f64 {
    let arch = Architecture::with_hidden(&vec![50; depth]).unwrap();
    let prior = he_prior(&arch, 0.1).unwrap();
    let mut r = rng(seed);
    let mut out = Vec::new();
    for _ in 0..400 {
        let w: Vec<f64> = prior.stds.iter().map(|s| s * normal(&mut r)).collect();
        for _ in 0..25 {
            out.push(forward_mean(&random_x(&mut r), &w, &arch).unwrap());
        }
    }
    sample_moments(&out).1
}

#[test]
fn he_prior_keeps_output_variance_near_one() {
    for depth in [2, 5] {
        let v = prior_output_variance(depth, depth as u64);
        assert!((0.5..=2.0).contains(&v), "depth {depth}: variance {v}");
    }
}

#[test]
fn he_prior_layer_stds() {
    let arch = Architecture::default();
    let prior = he_prior(&arch, 0.1).unwrap();
    let layers: Vec<_> = arch.layers().collect();
    assert!((prior.stds[layers[0].weight_offset] - 0.377_964_473).abs() < 1e-8);
    assert_eq!(prior.stds[layers[1].weight_offset], 0.2);
    assert_eq!(prior.stds[layers[3].weight_offset], 0.2);
}

#[test]
fn noise_prior_locations() {
    assert!((relative_noise_log_mean(0.1, 0.0) + 2.0768).abs() < 1e-4);
    assert!((relative_noise_log_mean(0.1, 1.0) + 2.5768).abs() < 1e-4);
    assert!((absolute_noise_log_mean(0.1, 10.0, 0.0) - 0.2258).abs() < 1e-4);
}

#[test]
fn lognormal_noise_prior_mean_matches_instrument_error() {
    let mut r = rng(21);
    for d in [0.5, 1.0] {
        let c = relative_noise_log_mean(0.1, d);
        let n = 1_000_000;
        let m = (0..n).map(|_| (c + d * normal(&mut r)).exp()).sum::<f64>() / n as f64;
        let want = SQRT_HALF_PI * 0.1;
        assert!((m / want - 1.0).abs() < 0.01, "d = {d}: {m} vs {want}");
    }
}

#[test]
fn folded_normal_mean_absolute_error() {
    let mut r = rng(22);
    let (er, z) = (0.1, 37.0);
    let sd = SQRT_HALF_PI * er * z;
    let n = 1_000_000;
    let m = (0..n).map(|_| (sd * normal(&mut r)).abs() / z).sum::<f64>() / n as f64;
    assert!((m / er - 1.0).abs() < 0.01, "{m}");
}

#[test]
fn generator_noise_is_gaussian_with_instrument_mape() {
    let cfg = SyntheticWellConfig {
        records: 100_000,
        ..SyntheticWellConfig::default()
    };
    let well = generate_synthetic_well(&cfg, 3).unwrap();
    assert_eq!(well.dataset.len(), 100_000);
    let er = cfg.er();
    let resid: Vec<f64> = well
        .dataset
        .records()
        .iter()
        .zip(&well.truth)
        .map(|(rec, z)| (rec.y - z) / (SQRT_HALF_PI * er * z))
        .collect();
    let (m, var, skew, kurt) = sample_moments(&resid);
    assert!(m.abs() < 0.02 && (var - 1.0).abs() < 0.02, "mean {m} var {var}");
    assert!(skew.abs() < 0.05, "skew {skew}");
    assert!(kurt.abs() < 0.1, "excess kurtosis {kurt}");
    let mape = well
        .dataset
        .records()
        .iter()
        .zip(&well.truth)
        .map(|(rec, z)| (rec.y - z).abs() / z)
        .sum::<f64>()
        / resid.len() as f64;
    assert!((mape / er - 1.0).abs() < 0.01, "mape {mape}");
}
