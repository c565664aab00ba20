use std::path::Path;

use serde::{Deserialize, Serialize};

use super::VariationalParams;
use crate::data::{MeterType, SplitKind, StandardizationStats};
use crate::error::{Result, VfmError};
use crate::model::{ModelSpec, ParameterVector, PriorSpec};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained parameters: a point estimate or a mean-field posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum FittedParams {
    Map { theta: ParameterVector },
    Vi { mu: Vec<f64>, rho: Vec<f64> },
}

impl FittedParams {
    pub fn variational(&self) -> Option<VariationalParams> {
        match self {
            FittedParams::Vi { mu, rho } => Some(VariationalParams {
                mu: mu.clone(),
                rho: rho.clone(),
            }),
            FittedParams::Map { .. } => None,
        }
    }

    fn values(&self) -> Box<dyn Iterator<Item = &f64> + '_> {
        match self {
            FittedParams::Map { theta } => Box::new(theta.0.iter()),
            FittedParams::Vi { mu, rho } => Box::new(mu.iter().chain(rho)),
        }
    }

    fn len(&self) -> usize {
        match self {
            FittedParams::Map { theta } => theta.len(),
            FittedParams::Vi { mu, .. } => mu.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub best_epoch: usize,
    pub stopping_epoch: usize,
    pub best_val_loss: f64,
}

/// Everything needed to reproduce predictions from a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub model: ModelSpec,
    pub prior: PriorSpec,
    pub params: FittedParams,
    pub standardization: StandardizationStats,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_days: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meter: Option<MeterType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingSummary>,
}

impl Checkpoint {
    pub fn validate(&self) -> Result<()> {
        if self.version != CHECKPOINT_VERSION {
            return Err(VfmError::Config(format!("unsupported checkpoint version {}", self.version)));
        }
        self.model.noise.validate()?;
        self.prior.validate()?;
        let k = self.model.num_params();
        if self.prior.len() != k {
            return Err(VfmError::dim("checkpoint prior", k, self.prior.len()));
        }
        if self.params.len() != k {
            return Err(VfmError::dim("checkpoint parameters", k, self.params.len()));
        }
        if let FittedParams::Vi { mu, rho } = &self.params {
            if mu.len() != rho.len() {
                return Err(VfmError::dim("checkpoint rho", mu.len(), rho.len()));
            }
        }
        if self.params.values().any(|v| !v.is_finite()) {
            return Err(VfmError::NonFiniteInput("checkpoint parameters"));
        }
        Ok(())
    }

    /// Pretty JSON. Floats use the shortest representation that parses back to the same bits.
    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path.as_ref(), text).map_err(|e| VfmError::io(path.as_ref(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| VfmError::io(path.as_ref(), e))?;
        Self::from_json(&text)
    }
}
