//! The probabilistic flow model: a ReLU network for the conditional mean flow rate,
//! a noise model for the measurement standard deviation, the Gaussian log-likelihood
//! and the factorized normal prior over all latent variables.

mod likelihood;
mod network;
mod noise;
mod prior;

pub use likelihood::{log_likelihood, log_likelihood_grad, PointLikelihood};
pub use network::{forward_mean, Network};
pub use noise::{noise_std, NoiseEval};
pub use prior::{
    absolute_noise_log_mean, build_prior, he_prior, noise_prior_from_mape, relative_noise_log_mean, NoisePriorConfig,
    PriorSpec, SQRT_HALF_PI,
};

use serde::{Deserialize, Serialize};

use crate::error::{Result, VfmError};

/// Number of explanatory variables.
pub const NUM_FEATURES: usize = 7;

/// Feature names in the order they enter the network.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = ["u", "p1", "p2", "T1", "T2", "eta_oil", "eta_gas"];

/// Explanatory variables for one steady-state operating point of a well.
///
/// Pressures in bar, temperatures in kelvin, choke opening and mass fractions dimensionless.
/// The water fraction is implied by `1 - eta_oil - eta_gas`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowFeatures {
    pub u: f64,
    pub p1: f64,
    pub p2: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub eta_oil: f64,
    pub eta_gas: f64,
}

impl FlowFeatures {
    pub fn new(u: f64, p1: f64, p2: f64, t1: f64, t2: f64, eta_oil: f64, eta_gas: f64) -> Result<Self> {
        let f = FlowFeatures {
            u,
            p1,
            p2,
            t1,
            t2,
            eta_oil,
            eta_gas,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(VfmError::Data(format!("non-finite feature in {self:?}")));
        }
        if !(0.0..=1.0).contains(&self.u) {
            return Err(VfmError::Data(format!("choke opening {} outside [0, 1]", self.u)));
        }
        if !(self.p2 > 0.0 && self.p1 >= self.p2) {
            return Err(VfmError::Data(format!(
                "pressures must satisfy p1 >= p2 > 0 (p1 = {}, p2 = {})",
                self.p1, self.p2
            )));
        }
        if self.eta_oil < 0.0 || self.eta_gas < 0.0 || self.eta_oil + self.eta_gas > 1.0 + 1e-12 {
            return Err(VfmError::Data(format!(
                "mass fractions must be non-negative and sum to at most one (oil = {}, gas = {})",
                self.eta_oil, self.eta_gas
            )));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [self.u, self.p1, self.p2, self.t1, self.t2, self.eta_oil, self.eta_gas]
    }

    /// Builds features from an array in network order without validation.
    pub fn from_array(a: [f64; NUM_FEATURES]) -> Self {
        FlowFeatures {
            u: a[0],
            p1: a[1],
            p2: a[2],
            t1: a[3],
            t2: a[4],
            eta_oil: a[5],
            eta_gas: a[6],
        }
    }
}

/// A standardized training pair: network input and target in model units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub x: [f64; NUM_FEATURES],
    pub y: f64,
}

/// Layer widths of a fully connected ReLU network, input and output included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Architecture {
    widths: Vec<usize>,
}

impl Architecture {
    /// `[7, hidden..., 1]`.
    pub fn with_hidden(hidden: &[usize]) -> Result<Self> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(NUM_FEATURES);
        widths.extend_from_slice(hidden);
        widths.push(1);
        Self::from_widths(widths)
    }

    pub fn from_widths(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(VfmError::Config("architecture needs at least input and output widths".into()));
        }
        if widths[0] != NUM_FEATURES {
            return Err(VfmError::Config(format!(
                "input width must be {NUM_FEATURES}, got {}",
                widths[0]
            )));
        }
        if *widths.last().unwrap() != 1 {
            return Err(VfmError::Config("output width must be 1".into()));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(VfmError::Config("all layer widths must be at least 1".into()));
        }
        Ok(Architecture { widths })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Number of affine layers (hidden layers plus the output layer).
    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn max_width(&self) -> usize {
        *self.widths.iter().max().unwrap()
    }

    /// Total number of weights and biases.
    pub fn num_params(&self) -> usize {
        self.layers().map(|l| l.n_out * (l.n_in + 1)).sum()
    }

    /// Layout of each affine layer inside the flat weight vector: the weight matrix
    /// (row-major, `n_out x n_in`) followed by the bias vector.
    pub fn layers(&self) -> impl Iterator<Item = LayerLayout> + '_ {
        let mut offset = 0;
        self.widths.windows(2).enumerate().map(move |(index, w)| {
            let layout = LayerLayout {
                index,
                n_in: w[0],
                n_out: w[1],
                weight_offset: offset,
                bias_offset: offset + w[0] * w[1],
            };
            offset += w[1] * (w[0] + 1);
            layout
        })
    }
}

impl Default for Architecture {
    /// Three hidden layers of 50 units.
    fn default() -> Self {
        Architecture::with_hidden(&[50, 50, 50]).unwrap()
    }
}

impl TryFrom<Vec<usize>> for Architecture {
    type Error = VfmError;
    fn try_from(widths: Vec<usize>) -> Result<Self> {
        Architecture::from_widths(widths)
    }
}

impl From<Architecture> for Vec<usize> {
    fn from(a: Architecture) -> Self {
        a.widths
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerLayout {
    pub index: usize,
    pub n_in: usize,
    pub n_out: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

/// Measurement noise model. Values are in model (standardized) units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// `g = sigma`, no latent noise variables.
    FixedHomoscedastic { sigma: f64 },
    /// `g = exp(psi_1)`.
    LearnedHomoscedastic,
    /// `g = exp(psi_2) * |z + offset| + exp(psi_1)`.
    ///
    /// `offset` shifts the standardized flow back to a zero-anchored scale
    /// (training mean divided by training std), so the multiplicative term stays
    /// proportional to the physical flow rate. Zero when the model works in raw units.
    LearnedHeteroscedastic {
        #[serde(default)]
        offset: f64,
    },
}

impl NoiseSpec {
    /// Number of latent noise variables.
    pub fn num_params(&self) -> usize {
        match self {
            NoiseSpec::FixedHomoscedastic { .. } => 0,
            NoiseSpec::LearnedHomoscedastic => 1,
            NoiseSpec::LearnedHeteroscedastic { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::FixedHomoscedastic { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                VfmError::Config(format!("fixed noise level must be positive and finite, got {sigma}")),
            ),
            NoiseSpec::LearnedHeteroscedastic { offset } if !offset.is_finite() => {
                Err(VfmError::Config("heteroscedastic offset must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, NoiseSpec::FixedHomoscedastic { .. })
    }
}

/// Architecture plus noise model: everything needed to interpret a parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub noise: NoiseSpec,
}

impl ModelSpec {
    pub fn new(architecture: Architecture, noise: NoiseSpec) -> Result<Self> {
        noise.validate()?;
        Ok(ModelSpec { architecture, noise })
    }

    pub fn num_weights(&self) -> usize {
        self.architecture.num_params()
    }

    pub fn num_noise_params(&self) -> usize {
        self.noise.num_params()
    }

    pub fn num_params(&self) -> usize {
        self.num_weights() + self.num_noise_params()
    }

    /// Splits a flat parameter slice into network weights and noise parameters.
    pub fn split<'a>(&self, theta: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        if theta.len() != self.num_params() {
            return Err(VfmError::dim("parameter vector", self.num_params(), theta.len()));
        }
        Ok(theta.split_at(self.num_weights()))
    }
}

/// Flat latent variables: network weights and biases layer by layer, then noise parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn zeros(spec: &ModelSpec) -> Self {
        ParameterVector(vec![0.0; spec.num_params()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights<'a>(&'a self, spec: &ModelSpec) -> Result<&'a [f64]> {
        Ok(spec.split(&self.0)?.0)
    }

    pub fn noise<'a>(&'a self, spec: &ModelSpec) -> Result<&'a [f64]> {
        Ok(spec.split(&self.0)?.1)
    }
}
