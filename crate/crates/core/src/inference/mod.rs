//! Training by MAP estimation and by stochastic gradient variational Bayes.

mod adam;
mod checkpoint;
mod elbo;
mod pipeline;
mod train;
mod variational;

pub use adam::{adam_update, AdamState};
pub use checkpoint::{Checkpoint, FittedParams, TrainingSummary, CHECKPOINT_VERSION};
pub use pipeline::{fit_dataset, fit_dataset_with_validation, FitOptions, Method, NoiseKind};
pub use elbo::{elbo_estimate, elbo_grad_with_noise, elbo_with_noise};
pub use train::{
    map_fit, map_fit_with_validation, map_objective, map_objective_grad, vi_fit, vi_fit_with_validation, vi_train,
    TrainConfig, TrainResult,
};
pub use variational::{kl_mean_field, reparameterize, VariationalParams};
