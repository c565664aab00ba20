//! Bayesian neural-network virtual flow metering.
//!
//! A flow model `y = f(x, phi) + noise` maps choke opening, pressures, temperatures and
//! mass fractions to total volumetric flow. Parameters are fitted either by MAP estimation
//! or by mean-field variational inference, with priors derived from network width and from
//! the expected error of the measuring instrument. The crate also ships a synthetic well
//! generator, chronological splits, predictive sampling and evaluation metrics.

pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod model;
pub mod predict;
pub mod stats;

pub use data::{
    generate_synthetic_well, split_future, split_historical, validation_split, MeterType, Record, SplitKind,
    StandardizationStats, SyntheticWellConfig, WellDataset,
};
pub use error::{Result, VfmError};
pub use evaluation::{calibration_curve, coverage_probability, cumulative_performance, mape, percentiles, rmse, EvaluationReport};
pub use inference::{map_fit, vi_fit, Checkpoint, TrainConfig, VariationalParams};
pub use model::{Architecture, FlowFeatures, ModelSpec, NoiseSpec, Observation, ParameterVector, PriorSpec};
pub use predict::{map_predict, posterior_predictive, PredictiveSampler, PredictiveSummary};
