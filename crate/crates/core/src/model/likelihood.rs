use super::{ModelSpec, Network, NoiseEval, Observation};
use crate::error::{Result, VfmError};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Per-point Gaussian log-density `log N(y | f(x, phi), g(f(x, phi), psi)^2)` with gradients,
/// bound to one parameter vector.
pub struct PointLikelihood<'a> {
    spec: &'a ModelSpec,
    net: Network<'a>,
    psi: &'a [f64],
    num_weights: usize,
}

impl<'a> PointLikelihood<'a> {
    pub fn new(spec: &'a ModelSpec, theta: &'a [f64]) -> Result<Self> {
        let (phi, psi) = spec.split(theta)?;
        Ok(PointLikelihood {
            spec,
            net: Network::new(&spec.architecture, phi)?,
            psi,
            num_weights: phi.len(),
        })
    }

    /// Mean flow and noise std at `x`.
    pub fn predict(&mut self, x: &[f64; 7]) -> (f64, f64) {
        let z = self.net.forward(x);
        (z, NoiseEval::eval(z, self.psi, &self.spec.noise).std)
    }

    pub fn log_density(&mut self, obs: &Observation) -> f64 {
        let (z, s) = self.predict(&obs.x);
        let r = (obs.y - z) / s;
        -HALF_LN_2PI - s.ln() - 0.5 * r * r
    }

    /// Returns the log-density and adds `weight * d(log-density)/d(theta)` into `grad`.
    pub fn log_density_grad(&mut self, obs: &Observation, weight: f64, grad: &mut [f64]) -> f64 {
        let z = self.net.forward(&obs.x);
        let noise = NoiseEval::eval(z, self.psi, &self.spec.noise);
        let s = noise.std;
        let resid = obs.y - z;
        let r = resid / s;
        let ll = -HALF_LN_2PI - s.ln() - 0.5 * r * r;

        // d ll / d s and d ll / d z (direct and through s).
        let d_s = -1.0 / s + r * r / s;
        let d_z = resid / (s * s) + d_s * noise.d_z;
        let (g_phi, g_psi) = grad.split_at_mut(self.num_weights);
        self.net.backward(weight * d_z, g_phi);
        for (g, dp) in g_psi.iter_mut().zip(noise.d_psi) {
            *g += weight * d_s * dp;
        }
        ll
    }
}

/// Total log-likelihood of a standardized dataset under parameters `theta`.
pub fn log_likelihood(data: &[Observation], theta: &[f64], spec: &ModelSpec) -> Result<f64> {
    if data.is_empty() {
        return Err(VfmError::Data("log-likelihood of an empty dataset".into()));
    }
    let mut point = PointLikelihood::new(spec, theta)?;
    let total: f64 = data.iter().map(|obs| point.log_density(obs)).sum();
    if !total.is_finite() {
        return Err(VfmError::Numerical(format!("log-likelihood is {total}")));
    }
    Ok(total)
}

/// Log-likelihood and its gradient; the gradient is added into `grad`.
pub fn log_likelihood_grad(
    data: &[Observation],
    theta: &[f64],
    spec: &ModelSpec,
    grad: &mut [f64],
) -> Result<f64> {
    if grad.len() != theta.len() {
        return Err(VfmError::dim("gradient buffer", theta.len(), grad.len()));
    }
    if data.is_empty() {
        return Err(VfmError::Data("log-likelihood of an empty dataset".into()));
    }
    let mut point = PointLikelihood::new(spec, theta)?;
    let total: f64 = data
        .iter()
        .map(|obs| point.log_density_grad(obs, 1.0, grad))
        .sum();
    if !total.is_finite() {
        return Err(VfmError::Numerical(format!("log-likelihood is {total}")));
    }
    Ok(total)
}
