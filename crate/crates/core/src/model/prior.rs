use serde::{Deserialize, Serialize};

use super::{Architecture, ModelSpec, NoiseSpec};
use crate::error::{Result, VfmError};

/// `sqrt(pi / 2)`: ratio between the standard deviation of a zero-mean normal and its mean absolute value.
pub const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;

/// Fully factorized normal prior: `theta_i ~ N(means[i], stds[i]^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl PriorSpec {
    pub fn new(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        let prior = PriorSpec { means, stds };
        prior.validate()?;
        Ok(prior)
    }

    pub fn empty() -> Self {
        PriorSpec {
            means: Vec::new(),
            stds: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.means.len() != self.stds.len() {
            return Err(VfmError::dim("prior stds", self.means.len(), self.stds.len()));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return Err(VfmError::NonFiniteInput("prior means"));
        }
        if let Some(s) = self.stds.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(VfmError::Config(format!("prior std must be positive and finite, got {s}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn concat(mut self, other: PriorSpec) -> Self {
        self.means.extend(other.means);
        self.stds.extend(other.stds);
        self
    }

    /// `sum_i log N(theta_i | mean_i, std_i^2)`.
    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.len() {
            return Err(VfmError::dim("prior log-density", self.len(), theta.len()));
        }
        Ok(theta
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(t, (m, s))| {
                let r = (t - m) / s;
                -0.5 * r * r - s.ln() - 0.918_938_533_204_672_8
            })
            .sum())
    }

    /// Adds `weight * d log p(theta) / d theta` into `grad`.
    pub fn add_log_density_grad(&self, theta: &[f64], weight: f64, grad: &mut [f64]) {
        for (i, g) in grad.iter_mut().enumerate() {
            *g -= weight * (theta[i] - self.means[i]) / (self.stds[i] * self.stds[i]);
        }
    }
}

/// He-prior for the network weights: zero means, weight std `sqrt(1/n_in)` for the first
/// layer and `sqrt(2/n_in)` for later layers, and `bias_std` for every bias.
pub fn he_prior(arch: &Architecture, bias_std: f64) -> Result<PriorSpec> {
    if !(bias_std > 0.0 && bias_std.is_finite()) {
        return Err(VfmError::Config(format!("bias prior std must be positive, got {bias_std}")));
    }
    let k = arch.num_params();
    let mut stds = vec![bias_std; k];
    for layer in arch.layers() {
        let gain = if layer.index == 0 { 1.0 } else { 2.0 };
        let s = (gain / layer.n_in as f64).sqrt();
        stds[layer.weight_offset..layer.bias_offset].fill(s);
    }
    PriorSpec::new(vec![0.0; k], stds)
}

/// Prior location of `psi_2` such that `exp(psi_2)` has mean `sqrt(pi/2) * er` when
/// `psi_2 ~ N(c, d^2)`.
pub fn relative_noise_log_mean(er: f64, d: f64) -> f64 {
    (SQRT_HALF_PI * er).ln() - d * d / 2.0
}

/// Prior location of `psi_1` such that `exp(psi_1)` has mean `sqrt(pi/2) * er * mean_flow`.
pub fn absolute_noise_log_mean(er: f64, mean_flow: f64, d: f64) -> f64 {
    (SQRT_HALF_PI * er * mean_flow).ln() - d * d / 2.0
}

/// Instrument accuracy used to build the noise prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePriorConfig {
    /// Instrument MAPE as a fraction (0.1 for 10 %).
    pub er: f64,
    /// Prior std of the noise parameter tied to `er`.
    pub d: f64,
    /// Relative level of the additive floor term of the heteroscedastic model.
    #[serde(default = "default_floor_er")]
    pub floor_er: f64,
    #[serde(default = "default_floor_d")]
    pub floor_d: f64,
}

fn default_floor_er() -> f64 {
    0.01
}

fn default_floor_d() -> f64 {
    0.5
}

impl NoisePriorConfig {
    pub fn new(er: f64, d: f64) -> Self {
        NoisePriorConfig {
            er,
            d,
            floor_er: default_floor_er(),
            floor_d: default_floor_d(),
        }
    }
}

/// Noise-parameter prior derived from an instrument's MAPE.
///
/// Heteroscedastic: `psi_1 ~ N(c_1, floor_d^2)` for the floor term (from `floor_er` and the
/// mean flow, unit flow if absent) and `psi_2 ~ N(c_2, d^2)`.
/// Learned homoscedastic: `psi_1 ~ N(c_1, d^2)`, which needs the mean flow.
/// Fixed noise has no latent variables and yields an empty prior.
pub fn noise_prior_from_mape(
    cfg: &NoisePriorConfig,
    mean_flow: Option<f64>,
    spec: &NoiseSpec,
) -> Result<PriorSpec> {
    if !(cfg.er > 0.0 && cfg.er.is_finite()) {
        return Err(VfmError::Config(format!("instrument MAPE must be positive, got {}", cfg.er)));
    }
    if let Some(z) = mean_flow {
        if !(z > 0.0 && z.is_finite()) {
            return Err(VfmError::Config(format!("mean flow must be positive, got {z}")));
        }
    }
    match spec {
        NoiseSpec::FixedHomoscedastic { .. } => Ok(PriorSpec::empty()),
        NoiseSpec::LearnedHomoscedastic => {
            let z = mean_flow.ok_or_else(|| {
                VfmError::Config("the homoscedastic noise prior needs the mean flow of the well".into())
            })?;
            PriorSpec::new(vec![absolute_noise_log_mean(cfg.er, z, cfg.d)], vec![cfg.d])
        }
        NoiseSpec::LearnedHeteroscedastic { .. } => {
            let z = mean_flow.unwrap_or(1.0);
            PriorSpec::new(
                vec![
                    absolute_noise_log_mean(cfg.floor_er, z, cfg.floor_d),
                    relative_noise_log_mean(cfg.er, cfg.d),
                ],
                vec![cfg.floor_d, cfg.d],
            )
        }
    }
}

/// Full prior over `theta = (phi, psi)`: He-prior on the weights followed by the noise prior.
pub fn build_prior(
    spec: &ModelSpec,
    bias_std: f64,
    noise: &NoisePriorConfig,
    mean_flow: Option<f64>,
) -> Result<PriorSpec> {
    Ok(he_prior(&spec.architecture, bias_std)?.concat(noise_prior_from_mape(noise, mean_flow, &spec.noise)?))
}
