use serde::{Deserialize, Serialize};

use super::checkpoint::{Checkpoint, FittedParams, TrainingSummary, CHECKPOINT_VERSION};
use super::train::{map_fit, map_fit_with_validation, vi_fit, vi_fit_with_validation, TrainConfig};
use crate::data::{MeterType, StandardizationStats, WellDataset};
use crate::error::{Result, VfmError};
use crate::model::{build_prior, Architecture, ModelSpec, NoisePriorConfig, NoiseSpec, SQRT_HALF_PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Point estimate with fixed homoscedastic noise.
    Map,
    /// Mean-field variational posterior.
    Vi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Fixed,
    Homo,
    Hetero,
}

/// Model, prior and optimizer settings for fitting one well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub method: Method,
    pub noise: NoiseKind,
    pub hidden: Vec<usize>,
    /// Instrument MAPE as a fraction; defaults to the meter's nominal accuracy.
    pub er: Option<f64>,
    /// Prior std of the log noise parameter tied to `er`.
    pub noise_prior_std: f64,
    pub floor_er: f64,
    pub floor_prior_std: f64,
    pub bias_std: f64,
    pub train: TrainConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            method: Method::Vi,
            noise: NoiseKind::Hetero,
            hidden: vec![50, 50, 50],
            er: None,
            noise_prior_std: 0.5,
            floor_er: 0.01,
            floor_prior_std: 0.5,
            bias_std: 0.1,
            train: TrainConfig::default(),
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.method == Method::Map && self.noise != NoiseKind::Fixed {
            return Err(VfmError::Config(format!(
                "MAP training uses fixed homoscedastic noise; got noise model '{}'",
                match self.noise {
                    NoiseKind::Homo => "homo",
                    _ => "hetero",
                }
            )));
        }
        if let Some(er) = self.er {
            if !(er > 0.0 && er.is_finite()) {
                return Err(VfmError::Config(format!("instrument MAPE must be positive, got {er}")));
            }
        }
        Architecture::with_hidden(&self.hidden)?;
        self.train.validate()
    }

    fn resolve_er(&self, meter: Option<MeterType>) -> f64 {
        self.er.or(meter.map(MeterType::default_er)).unwrap_or(MeterType::Mpfm.default_er())
    }

    /// Model specification for targets standardized with `stats`.
    pub fn model_spec(&self, stats: &StandardizationStats, meter: Option<MeterType>) -> Result<ModelSpec> {
        let mean_flow = stats.mean_flow_model_units();
        let noise = match self.noise {
            NoiseKind::Fixed => NoiseSpec::FixedHomoscedastic {
                sigma: SQRT_HALF_PI * self.resolve_er(meter) * mean_flow,
            },
            NoiseKind::Homo => NoiseSpec::LearnedHomoscedastic,
            NoiseKind::Hetero => NoiseSpec::LearnedHeteroscedastic { offset: mean_flow },
        };
        ModelSpec::new(Architecture::with_hidden(&self.hidden)?, noise)
    }
}

/// Standardizes on `train`, builds the prior and fits with a random validation split.
pub fn fit_dataset(train: &WellDataset, opts: &FitOptions) -> Result<Checkpoint> {
    fit_inner(train, None, opts)
}

/// As `fit_dataset` with an explicit validation set. Standardization uses `fit` only.
pub fn fit_dataset_with_validation(fit: &WellDataset, val: &WellDataset, opts: &FitOptions) -> Result<Checkpoint> {
    fit_inner(fit, Some(val), opts)
}

fn fit_inner(train: &WellDataset, val: Option<&WellDataset>, opts: &FitOptions) -> Result<Checkpoint> {
    opts.validate()?;
    let stats = StandardizationStats::fit(train)?;
    let meter = train.meter();
    let spec = opts.model_spec(&stats, meter)?;
    let noise_cfg = NoisePriorConfig {
        er: opts.resolve_er(meter),
        d: opts.noise_prior_std,
        floor_er: opts.floor_er,
        floor_d: opts.floor_prior_std,
    };
    let prior = build_prior(&spec, opts.bias_std, &noise_cfg, Some(stats.mean_flow_model_units()))?;
    let data = stats.observations(train);
    let val_data = val.map(|v| stats.observations(v));
    let (params, summary) = match (opts.method, &val_data) {
        (Method::Map, None) => {
            let r = map_fit(&data, &prior, &spec, &opts.train)?;
            (FittedParams::Map { theta: r.params.clone() }, summary(r.best_epoch, r.stopping_epoch, r.best_val_loss))
        }
        (Method::Map, Some(v)) => {
            let r = map_fit_with_validation(&data, v, &prior, &spec, &opts.train)?;
            (FittedParams::Map { theta: r.params.clone() }, summary(r.best_epoch, r.stopping_epoch, r.best_val_loss))
        }
        (Method::Vi, None) => {
            let r = vi_fit(&data, &prior, &spec, &opts.train)?;
            let s = summary(r.best_epoch, r.stopping_epoch, r.best_val_loss);
            (FittedParams::Vi { mu: r.params.mu, rho: r.params.rho }, s)
        }
        (Method::Vi, Some(v)) => {
            let r = vi_fit_with_validation(&data, v, &prior, &spec, &opts.train)?;
            let s = summary(r.best_epoch, r.stopping_epoch, r.best_val_loss);
            (FittedParams::Vi { mu: r.params.mu, rho: r.params.rho }, s)
        }
    };
    Ok(Checkpoint {
        version: CHECKPOINT_VERSION,
        model: spec,
        prior,
        params,
        standardization: stats,
        seed: opts.train.seed,
        split: None,
        window_days: None,
        meter,
        training: Some(summary),
    })
}

fn summary(best_epoch: usize, stopping_epoch: usize, best_val_loss: f64) -> TrainingSummary {
    TrainingSummary {
        best_epoch,
        stopping_epoch,
        best_val_loss,
    }
}
