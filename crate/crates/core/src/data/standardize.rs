use serde::{Deserialize, Serialize};

use super::WellDataset;
use crate::error::{Result, VfmError};
use crate::model::{FlowFeatures, Observation, FEATURE_NAMES, NUM_FEATURES};
use crate::stats::{mean, std_pop};

/// Per-feature and target location/scale computed on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub feature_mean: [f64; NUM_FEATURES],
    pub feature_std: [f64; NUM_FEATURES],
    pub target_mean: f64,
    pub target_std: f64,
}

impl StandardizationStats {
    /// Fits means and population standard deviations. A constant feature or target is an error.
    pub fn fit(dataset: &WellDataset) -> Result<Self> {
        if dataset.len() < 2 {
            return Err(VfmError::Data("standardization needs at least two records".into()));
        }
        let mut feature_mean = [0.0; NUM_FEATURES];
        let mut feature_std = [0.0; NUM_FEATURES];
        for j in 0..NUM_FEATURES {
            let col: Vec<f64> = dataset.records().iter().map(|r| r.features.to_array()[j]).collect();
            feature_mean[j] = mean(&col);
            feature_std[j] = std_pop(&col);
            if !(feature_std[j] > 1e-12 * feature_mean[j].abs().max(1.0)) {
                return Err(VfmError::Data(format!(
                    "feature '{}' has zero variance on the training split",
                    FEATURE_NAMES[j]
                )));
            }
        }
        let y = dataset.targets();
        let target_mean = mean(&y);
        let target_std = std_pop(&y);
        if !(target_std > 1e-12 * target_mean.abs().max(1.0)) {
            return Err(VfmError::Data("target 'y' has zero variance on the training split".into()));
        }
        Ok(StandardizationStats {
            feature_mean,
            feature_std,
            target_mean,
            target_std,
        })
    }

    pub fn standardize_features(&self, f: &FlowFeatures) -> [f64; NUM_FEATURES] {
        let a = f.to_array();
        std::array::from_fn(|j| (a[j] - self.feature_mean[j]) / self.feature_std[j])
    }

    pub fn destandardize_features(&self, x: &[f64; NUM_FEATURES]) -> FlowFeatures {
        FlowFeatures::from_array(std::array::from_fn(|j| x[j] * self.feature_std[j] + self.feature_mean[j]))
    }

    pub fn standardize_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    pub fn destandardize_target(&self, z: f64) -> f64 {
        z * self.target_std + self.target_mean
    }

    /// Converts a physical standard deviation of the target to model units.
    pub fn scale_to_model(&self, s: f64) -> f64 {
        s / self.target_std
    }

    pub fn scale_to_physical(&self, s: f64) -> f64 {
        s * self.target_std
    }

    /// Training mean flow in model units; also the offset that maps a standardized flow
    /// back to a zero-anchored scale.
    pub fn mean_flow_model_units(&self) -> f64 {
        self.target_mean / self.target_std
    }

    pub fn observations(&self, dataset: &WellDataset) -> Vec<Observation> {
        dataset
            .records()
            .iter()
            .map(|r| Observation {
                x: self.standardize_features(&r.features),
                y: self.standardize_target(r.y),
            })
            .collect()
    }
}
