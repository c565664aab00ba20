use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VfmError};
use crate::model::{ParameterVector, PriorSpec};
use crate::stats::{sigmoid, softplus, softplus_inv, Rng};

/// Mean-field normal posterior `q(theta) = prod_i N(mu_i, softplus(rho_i)^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalParams {
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
}

impl VariationalParams {
    pub fn new(mu: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        if mu.len() != rho.len() {
            return Err(VfmError::dim("variational rho", mu.len(), rho.len()));
        }
        Ok(VariationalParams { mu, rho })
    }

    /// Build from means and standard deviations (`sigma > 0`).
    pub fn from_mean_std(mu: Vec<f64>, sigma: &[f64]) -> Result<Self> {
        if let Some(s) = sigma.iter().find(|s| !(**s > 0.0)) {
            return Err(VfmError::Config(format!("variational std must be positive, got {s}")));
        }
        Self::new(mu, sigma.iter().map(|&s| softplus_inv(s)).collect())
    }

    /// Practically a point mass at `theta` (`sigma ~ 2e-22`).
    pub fn point_mass(theta: &[f64]) -> Self {
        VariationalParams {
            mu: theta.to_vec(),
            rho: vec![-50.0; theta.len()],
        }
    }

    /// Means drawn from the prior, `sigma = scale * prior std`.
    pub fn init_from_prior(prior: &PriorSpec, scale: f64, rng: &mut Rng) -> Self {
        let mu = prior
            .means
            .iter()
            .zip(&prior.stds)
            .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let rho = prior.stds.iter().map(|s| softplus_inv(scale * s)).collect();
        VariationalParams { mu, rho }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.rho.iter().map(|&r| softplus(r)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.mu.iter().chain(&self.rho).all(|v| v.is_finite())
    }
}

/// `theta = mu + softplus(rho) * zeta`.
pub fn reparameterize(q: &VariationalParams, zeta: &[f64]) -> Result<ParameterVector> {
    if zeta.len() != q.len() {
        return Err(VfmError::dim("reparameterization noise", q.len(), zeta.len()));
    }
    let mut theta = vec![0.0; q.len()];
    reparameterize_into(q, zeta, &mut theta);
    Ok(ParameterVector(theta))
}

pub(crate) fn reparameterize_into(q: &VariationalParams, zeta: &[f64], theta: &mut [f64]) {
    for i in 0..theta.len() {
        theta[i] = q.mu[i] + softplus(q.rho[i]) * zeta[i];
    }
}

pub(crate) fn sample_standard_normal(rng: &mut Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Closed-form `KL(q || prior)` between two mean-field normals.
pub fn kl_mean_field(q: &VariationalParams, prior: &PriorSpec) -> Result<f64> {
    if q.len() != prior.len() {
        return Err(VfmError::dim("KL prior", q.len(), prior.len()));
    }
    if !q.is_finite() {
        return Err(VfmError::NonFiniteInput("variational parameters"));
    }
    prior.validate()?;
    let mut total = 0.0;
    for i in 0..q.len() {
        let ratio = softplus(q.rho[i]) / prior.stds[i];
        let shift = (q.mu[i] - prior.means[i]) / prior.stds[i];
        total += -1.0 - 2.0 * ratio.ln() + shift * shift + ratio * ratio;
    }
    // Rounding can leave a tiny negative value when q equals the prior.
    Ok((0.5 * total).max(0.0))
}

/// Adds `weight * dKL/dmu` and `weight * dKL/drho` into the gradient buffers; returns KL.
pub(crate) fn kl_grad(
    q: &VariationalParams,
    prior: &PriorSpec,
    weight: f64,
    grad_mu: &mut [f64],
    grad_rho: &mut [f64],
) -> f64 {
    let mut total = 0.0;
    for i in 0..q.len() {
        let sigma = softplus(q.rho[i]);
        let pv = prior.stds[i] * prior.stds[i];
        let ratio = sigma / prior.stds[i];
        let shift = (q.mu[i] - prior.means[i]) / prior.stds[i];
        total += -1.0 - 2.0 * ratio.ln() + shift * shift + ratio * ratio;
        grad_mu[i] += weight * (q.mu[i] - prior.means[i]) / pv;
        grad_rho[i] += weight * (-1.0 / sigma + sigma / pv) * sigmoid(q.rho[i]);
    }
    0.5 * total
}
