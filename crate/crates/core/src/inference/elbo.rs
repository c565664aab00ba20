//! Monte-Carlo estimates of the evidence lower bound and its reparameterized gradient.

use super::variational::{kl_grad, kl_mean_field, reparameterize_into, sample_standard_normal};
use super::VariationalParams;
use crate::error::{Result, VfmError};
use crate::model::{ModelSpec, Observation, PointLikelihood, PriorSpec};
use crate::stats::{sigmoid, softplus, Rng};

fn check_inputs(
    batch: &[Observation],
    q: &VariationalParams,
    prior: &PriorSpec,
    spec: &ModelSpec,
    n_total: usize,
) -> Result<()> {
    if batch.is_empty() {
        return Err(VfmError::Data("empty mini-batch".into()));
    }
    if n_total < batch.len() {
        return Err(VfmError::Config(format!(
            "dataset size {n_total} smaller than the batch ({})",
            batch.len()
        )));
    }
    if q.len() != spec.num_params() {
        return Err(VfmError::dim("variational parameters", spec.num_params(), q.len()));
    }
    if prior.len() != spec.num_params() {
        return Err(VfmError::dim("prior", spec.num_params(), prior.len()));
    }
    Ok(())
}

/// SGVB estimate `(N/B) (1/M) sum_m log p(batch | theta_m) - KL(q || prior)` with `M` fresh
/// reparameterized draws.
pub fn elbo_estimate(
    batch: &[Observation],
    q: &VariationalParams,
    prior: &PriorSpec,
    spec: &ModelSpec,
    samples: usize,
    n_total: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if samples == 0 {
        return Err(VfmError::Config("at least one Monte-Carlo sample is required".into()));
    }
    let zetas: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let mut z = vec![0.0; q.len()];
            sample_standard_normal(rng, &mut z);
            z
        })
        .collect();
    elbo_with_noise(batch, q, prior, spec, &zetas, n_total)
}

/// ELBO estimate for given standard-normal draws (one vector per Monte-Carlo sample).
pub fn elbo_with_noise(
    batch: &[Observation],
    q: &VariationalParams,
    prior: &PriorSpec,
    spec: &ModelSpec,
    zetas: &[Vec<f64>],
    n_total: usize,
) -> Result<f64> {
    check_inputs(batch, q, prior, spec, n_total)?;
    if zetas.is_empty() {
        return Err(VfmError::Config("at least one Monte-Carlo sample is required".into()));
    }
    let scale = n_total as f64 / batch.len() as f64 / zetas.len() as f64;
    let mut theta = vec![0.0; q.len()];
    let mut expected = 0.0;
    for zeta in zetas {
        if zeta.len() != q.len() {
            return Err(VfmError::dim("reparameterization noise", q.len(), zeta.len()));
        }
        reparameterize_into(q, zeta, &mut theta);
        let mut point = PointLikelihood::new(spec, &theta)?;
        expected += batch.iter().map(|o| point.log_density(o)).sum::<f64>();
    }
    let elbo = scale * expected - kl_mean_field(q, prior)?;
    if !elbo.is_finite() {
        return Err(VfmError::Numerical(format!("ELBO estimate is {elbo}")));
    }
    Ok(elbo)
}

/// ELBO estimate and its gradient with respect to `(mu, rho)` for given draws.
/// The gradient buffers are overwritten.
#[allow(clippy::too_many_arguments)]
pub fn elbo_grad_with_noise(
    batch: &[Observation],
    q: &VariationalParams,
    prior: &PriorSpec,
    spec: &ModelSpec,
    zetas: &[Vec<f64>],
    n_total: usize,
    grad_mu: &mut [f64],
    grad_rho: &mut [f64],
) -> Result<f64> {
    check_inputs(batch, q, prior, spec, n_total)?;
    if grad_mu.len() != q.len() || grad_rho.len() != q.len() {
        return Err(VfmError::dim("ELBO gradient buffer", q.len(), grad_mu.len()));
    }
    let mut ws = ElboWorkspace::new(q.len());
    ws.value_and_grad(batch, q, prior, spec, zetas, n_total, grad_mu, grad_rho)
}

/// Reusable buffers for repeated gradient evaluations during training.
pub(crate) struct ElboWorkspace {
    theta: Vec<f64>,
    g_theta: Vec<f64>,
    sigma: Vec<f64>,
    dsigma: Vec<f64>,
}

impl ElboWorkspace {
    pub(crate) fn new(k: usize) -> Self {
        ElboWorkspace {
            theta: vec![0.0; k],
            g_theta: vec![0.0; k],
            sigma: vec![0.0; k],
            dsigma: vec![0.0; k],
        }
    }

    /// Overwrites the gradient buffers with d ELBO / d(mu, rho); returns the ELBO estimate.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn value_and_grad(
        &mut self,
        batch: &[Observation],
        q: &VariationalParams,
        prior: &PriorSpec,
        spec: &ModelSpec,
        zetas: &[Vec<f64>],
        n_total: usize,
        grad_mu: &mut [f64],
        grad_rho: &mut [f64],
    ) -> Result<f64> {
        let k = q.len();
        for i in 0..k {
            self.sigma[i] = softplus(q.rho[i]);
            self.dsigma[i] = sigmoid(q.rho[i]);
        }
        grad_mu.fill(0.0);
        grad_rho.fill(0.0);
        let scale = n_total as f64 / batch.len() as f64 / zetas.len() as f64;
        let mut expected = 0.0;
        for zeta in zetas {
            for i in 0..k {
                self.theta[i] = q.mu[i] + self.sigma[i] * zeta[i];
            }
            self.g_theta.fill(0.0);
            let mut point = PointLikelihood::new(spec, &self.theta)?;
            for obs in batch {
                expected += point.log_density_grad(obs, 1.0, &mut self.g_theta);
            }
            for i in 0..k {
                let g = scale * self.g_theta[i];
                grad_mu[i] += g;
                grad_rho[i] += g * self.dsigma[i] * zeta[i];
            }
        }
        let kl = kl_grad(q, prior, -1.0, grad_mu, grad_rho);
        let elbo = scale * expected - kl;
        if !elbo.is_finite() {
            return Err(VfmError::Numerical(format!("ELBO estimate is {elbo}")));
        }
        Ok(elbo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_likelihood, Architecture, NoiseSpec};

    #[test]
    fn degenerate_posterior_reduces_to_likelihood_minus_kl() {
        let spec = ModelSpec::new(
            Architecture::with_hidden(&[3]).unwrap(),
            NoiseSpec::FixedHomoscedastic { sigma: 0.5 },
        )
        .unwrap();
        let k = spec.num_params();
        let mu: Vec<f64> = (0..k).map(|i| ((i as f64) * 0.37).sin()).collect();
        let q = VariationalParams::new(mu.clone(), vec![-60.0; k]).unwrap();
        let prior = PriorSpec::new(vec![0.0; k], vec![1.0; k]).unwrap();
        let data: Vec<Observation> = (0..10)
            .map(|i| Observation {
                x: std::array::from_fn(|j| ((i * 7 + j) as f64 * 0.11).cos()),
                y: (i as f64) * 0.1,
            })
            .collect();
        let mut rng = crate::stats::rng(1);
        let elbo = elbo_estimate(&data, &q, &prior, &spec, 3, data.len(), &mut rng).unwrap();
        let expected = log_likelihood(&data, &mu, &spec).unwrap() - kl_mean_field(&q, &prior).unwrap();
        assert!((elbo - expected).abs() < 1e-9 * expected.abs());
    }

    #[test]
    fn rejects_empty_batch_and_zero_samples() {
        let spec = ModelSpec::new(
            Architecture::from_widths(vec![7, 1]).unwrap(),
            NoiseSpec::LearnedHomoscedastic,
        )
        .unwrap();
        let q = VariationalParams::new(vec![0.0; 9], vec![0.0; 9]).unwrap();
        let prior = PriorSpec::new(vec![0.0; 9], vec![1.0; 9]).unwrap();
        let mut rng = crate::stats::rng(1);
        assert!(elbo_estimate(&[], &q, &prior, &spec, 1, 1, &mut rng).is_err());
        let obs = [Observation { x: [0.0; 7], y: 0.0 }];
        assert!(elbo_estimate(&obs, &q, &prior, &spec, 0, 1, &mut rng).is_err());
    }
}
