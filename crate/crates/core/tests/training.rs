mod common;

use bayes_vfm::inference::{map_fit, map_fit_with_validation, map_objective, reparameterize, vi_fit, TrainConfig};
use bayes_vfm::model::{forward_mean, log_likelihood, Architecture, ModelSpec, NoiseSpec, Observation, PriorSpec};
use bayes_vfm::stats::rng;
use common::{normal, normals, toy_data};

fn linear_spec(sigma: f64) -> ModelSpec {
    ModelSpec::new(Architecture::from_widths(vec![7, 1]).unwrap(), NoiseSpec::FixedHomoscedastic { sigma }).unwrap()
}

/// Ordinary least squares with an intercept, by Gaussian elimination on the normal equations.
fn ols(data: &[Observation]) -> Vec<f64> {
    let p = 8;
    let row = |o: &Observation| {
        let mut r = o.x.to_vec();
        r.push(1.0);
        r
    };
    let mut a = vec![vec![0.0; p + 1]; p];
    for o in data {
        let r = row(o);
        for i in 0..p {
            for j in 0..p {
                a[i][j] += r[i] * r[j];
            }
            a[i][p] += r[i] * o.y;
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

#[test]
fn vi_recovers_conjugate_slope() {
    let sigma_n = 0.5;
    let spec = linear_spec(sigma_n);
    let mut r = rng(1);
    let data: Vec<Observation> = (0..300)
        .map(|_| {
            let mut x = [0.0; 7];
            x[0] = normal(&mut r);
            Observation { x, y: 2.0 * x[0] + sigma_n * normal(&mut r) }
        })
        .collect();
    let k = spec.num_params();
    let prior = PriorSpec::new(vec![0.0; k], vec![3.0; k]).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.01,
        max_epochs: 400,
        patience: 400,
        ..TrainConfig::default()
    };
    let fit = vi_fit(&data, &prior, &spec, &cfg).unwrap();
    let q = fit.params;
    // Conjugate posterior std of the slope on the fitting points.
    let sxx: f64 = data.iter().map(|o| o.x[0] * o.x[0]).sum::<f64>() * (1.0 - cfg.validation_fraction);
    let post_sd = (1.0 / (sxx / (sigma_n * sigma_n) + 1.0 / 9.0)).sqrt();
    let sd = q.sigma()[0].max(post_sd);
    assert!((q.mu[0] - 2.0).abs() < 3.0 * sd, "slope {} +- {}", q.mu[0], q.sigma()[0]);
    assert!(q.sigma()[0] < 3.0 * post_sd, "sigma {} vs {}", q.sigma()[0], post_sd);
}

#[test]
fn repeated_points_explain_away_epistemic_uncertainty() {
    let spec = ModelSpec::new(Architecture::with_hidden(&[8]).unwrap(), NoiseSpec::FixedHomoscedastic { sigma: 0.1 }).unwrap();
    let mut r = rng(2);
    let data: Vec<Observation> = (0..400).map(|_| Observation { x: [0.0; 7], y: 0.1 * normal(&mut r) }).collect();
    let k = spec.num_params();
    let prior = PriorSpec::new(vec![0.0; k], vec![1.0; k]).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.01,
        max_epochs: 300,
        ..TrainConfig::default()
    };
    let q = vi_fit(&data, &prior, &spec, &cfg).unwrap().params;
    let arch = &spec.architecture;
    let mut draws = Vec::new();
    for _ in 0..4000 {
        let theta = reparameterize(&q, &normals(&mut r, k)).unwrap();
        draws.push(forward_mean(&[0.0; 7], &theta.0, arch).unwrap());
    }
    let (_, var, _, _) = common::sample_moments(&draws);
    assert!(var.sqrt() < 0.05, "epistemic std {}", var.sqrt());
}

#[test]
fn training_is_deterministic() {
    let spec = ModelSpec::new(Architecture::with_hidden(&[6]).unwrap(), NoiseSpec::LearnedHeteroscedastic { offset: 2.0 }).unwrap();
    let data = toy_data(&mut rng(3), 120, 0.2, |x| x[0].max(0.0) + x[1]);
    let k = spec.num_params();
    let prior = PriorSpec::new(vec![0.0; k], vec![0.5; k]).unwrap();
    let cfg = TrainConfig {
        max_epochs: 30,
        seed: 17,
        ..TrainConfig::default()
    };
    let a = vi_fit(&data, &prior, &spec, &cfg).unwrap();
    let b = vi_fit(&data, &prior, &spec, &cfg).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.train_history), bits(&b.train_history));
    assert_eq!(bits(&a.val_history), bits(&b.val_history));
    assert_eq!(bits(&a.params.mu), bits(&b.params.mu));
    assert_eq!(bits(&a.params.rho), bits(&b.params.rho));

    let other = vi_fit(&data, &prior, &spec, &TrainConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(bits(&a.train_history), bits(&other.train_history));
}

#[test]
fn map_with_flat_prior_is_least_squares() {
    let spec = linear_spec(0.1);
    let beta = [0.8, -0.5, 0.3, 0.0, 1.2, -0.7, 0.1];
    let data = toy_data(&mut rng(4), 160, 0.05, |x| x.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + 0.4);
    let prior = PriorSpec::new(vec![0.0; 8], vec![100.0; 8]).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.05,
        batch_size: 160,
        max_epochs: 20_000,
        patience: 20_000,
        ..TrainConfig::default()
    };
    let fit = map_fit_with_validation(&data, &data, &prior, &spec, &cfg).unwrap();
    let want = ols(&data);
    for (g, w) in fit.params.0.iter().zip(&want) {
        assert!((g - w).abs() < 1e-3, "{g} vs {w}");
    }
}

#[test]
fn map_with_tight_prior_shrinks_to_zero() {
    let spec = linear_spec(0.1);
    let data = toy_data(&mut rng(5), 100, 0.05, |x| 3.0 * x[0] + 2.0);
    let prior = PriorSpec::new(vec![0.0; 8], vec![1e-6; 8]).unwrap();
    let cfg = TrainConfig {
        max_epochs: 200,
        ..TrainConfig::default()
    };
    let fit = map_fit(&data, &prior, &spec, &cfg).unwrap();
    assert!(fit.params.0.iter().all(|t| t.abs() < 0.01), "{:?}", fit.params.0);
    let z = forward_mean(&[1.0; 7], &fit.params.0, &spec.architecture).unwrap();
    assert!(z.abs() < 0.05);
}

#[test]
fn map_training_descends_and_restores_best_epoch() {
    let spec = ModelSpec::new(Architecture::with_hidden(&[10]).unwrap(), NoiseSpec::FixedHomoscedastic { sigma: 0.2 }).unwrap();
    let data = toy_data(&mut rng(6), 150, 0.2, |x| (x[0] - x[3]).max(0.0) + 0.5 * x[2]);
    let k = spec.num_params();
    let prior = PriorSpec::new(vec![0.0; k], vec![0.5; k]).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.01,
        max_epochs: 2000,
        patience: 20,
        ..TrainConfig::default()
    };
    let (fit_set, val_set) = (&data[..120], &data[120..]);
    let res = map_fit_with_validation(fit_set, val_set, &prior, &spec, &cfg).unwrap();

    let min = res.val_history.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(res.best_val_loss, min);
    assert_eq!(res.val_history[res.best_epoch], min);
    let recomputed = -log_likelihood(val_set, &res.params.0, &spec).unwrap() / val_set.len() as f64;
    assert!((recomputed - min).abs() < 1e-12 * min.abs().max(1.0));
    assert!(res.stopping_epoch < cfg.max_epochs, "did not stop early");
    assert_eq!(res.stopping_epoch, res.best_epoch + cfg.patience + 1);

    let trained = map_objective(fit_set, &res.params.0, &prior, &spec).unwrap();
    let mut r = rng(60);
    for _ in 0..20 {
        let init: Vec<f64> = prior.stds.iter().map(|s| s * normal(&mut r)).collect();
        assert!(trained <= map_objective(fit_set, &init, &prior, &spec).unwrap());
    }
    assert!(res.train_history[res.best_epoch] < res.train_history[0]);
}

#[test]
fn vi_early_stopping_restores_best_epoch() {
    let spec = ModelSpec::new(Architecture::with_hidden(&[6]).unwrap(), NoiseSpec::LearnedHomoscedastic).unwrap();
    let data = toy_data(&mut rng(7), 100, 0.3, |x| x[0] * 0.7);
    let k = spec.num_params();
    let prior = PriorSpec::new(vec![0.0; k], vec![0.5; k]).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.02,
        max_epochs: 3000,
        patience: 10,
        ..TrainConfig::default()
    };
    let res = vi_fit(&data, &prior, &spec, &cfg).unwrap();
    let min = res.val_history.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(res.best_val_loss, min);
    assert_eq!(res.val_history[res.best_epoch], min);
    assert_eq!(res.stopping_epoch, res.best_epoch + cfg.patience + 1);
}

#[test]
fn map_objective_is_negative_log_posterior_up_to_a_constant() {
    let spec = ModelSpec::new(Architecture::with_hidden(&[5, 3]).unwrap(), NoiseSpec::FixedHomoscedastic { sigma: 0.4 }).unwrap();
    let data = toy_data(&mut rng(8), 60, 0.4, |x| x[1].sin());
    let k = spec.num_params();
    let mut r = rng(80);
    let prior = PriorSpec::new(normals(&mut r, k), vec![0.8; k]).unwrap();
    let diffs: Vec<f64> = (0..50)
        .map(|_| {
            let theta = normals(&mut r, k);
            let neg_log_post = -log_likelihood(&data, &theta, &spec).unwrap() - prior.log_density(&theta).unwrap();
            neg_log_post - map_objective(&data, &theta, &prior, &spec).unwrap()
        })
        .collect();
    let (_, var, _, _) = common::sample_moments(&diffs);
    assert!(var < 1e-9, "variance {var}");
}
