//! MAP and SGVB training loops with Adam and early stopping.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_update, AdamState};
use super::elbo::ElboWorkspace;
use super::variational::{kl_mean_field, reparameterize_into, sample_standard_normal, VariationalParams};
use crate::data::validation_split;
use crate::error::{Result, VfmError};
use crate::model::{ModelSpec, NoiseSpec, Observation, ParameterVector, PointLikelihood, PriorSpec};
use crate::stats::{derive_seed, rng, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Mini-batch size; clamped to the number of fitting points.
    pub batch_size: usize,
    /// Monte-Carlo draws per gradient step (VI only).
    pub mc_samples: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub validation_fraction: f64,
    /// Fixed draws used to estimate the validation ELBO (VI only).
    pub validation_samples: usize,
    /// Initial variational std as a fraction of the prior std (VI only).
    pub init_std_scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 32,
            mc_samples: 1,
            max_epochs: 1000,
            patience: 50,
            validation_fraction: 0.2,
            validation_samples: 4,
            init_std_scale: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(VfmError::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(VfmError::Config("batch size must be at least 1".into()));
        }
        if self.mc_samples == 0 || self.validation_samples == 0 {
            return Err(VfmError::Config("Monte-Carlo sample counts must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(VfmError::Config("max_epochs must be at least 1".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(VfmError::Config(format!(
                "validation fraction must lie in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        if !(self.init_std_scale > 0.0) {
            return Err(VfmError::Config("init_std_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of a training run. `params` are the best-validation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult<P> {
    pub params: P,
    /// Mean per-point training loss of each epoch.
    pub train_history: Vec<f64>,
    /// Per-point validation loss after each epoch.
    pub val_history: Vec<f64>,
    /// Zero-based epoch whose parameters were kept.
    pub best_epoch: usize,
    /// Number of epochs run.
    pub stopping_epoch: usize,
    pub best_val_loss: f64,
}

/// MAP objective `(1/(2 sigma_n^2)) sum (y - f)^2 + sum (theta - mean)^2 / (2 std^2)`.
pub fn map_objective(data: &[Observation], theta: &[f64], prior: &PriorSpec, spec: &ModelSpec) -> Result<f64> {
    let sigma = fixed_sigma(spec)?;
    let mut point = PointLikelihood::new(spec, theta)?;
    let sse: f64 = data
        .iter()
        .map(|o| {
            let (z, _) = point.predict(&o.x);
            (o.y - z).powi(2)
        })
        .sum();
    Ok(sse / (2.0 * sigma * sigma) + prior_penalty(theta, prior)?)
}

/// MAP objective and its gradient (overwrites `grad`).
pub fn map_objective_grad(
    data: &[Observation],
    theta: &[f64],
    prior: &PriorSpec,
    spec: &ModelSpec,
    grad: &mut [f64],
) -> Result<f64> {
    let sigma = fixed_sigma(spec)?;
    if grad.len() != theta.len() {
        return Err(VfmError::dim("gradient buffer", theta.len(), grad.len()));
    }
    grad.fill(0.0);
    let mut point = PointLikelihood::new(spec, theta)?;
    let const_term = 0.5 * (2.0 * std::f64::consts::PI * sigma * sigma).ln();
    let mut value = 0.0;
    for o in data {
        value += -point.log_density_grad(o, -1.0, grad) - const_term;
    }
    prior.add_log_density_grad(theta, -1.0, grad);
    Ok(value + prior_penalty(theta, prior)?)
}

fn prior_penalty(theta: &[f64], prior: &PriorSpec) -> Result<f64> {
    if theta.len() != prior.len() {
        return Err(VfmError::dim("prior", theta.len(), prior.len()));
    }
    Ok(theta
        .iter()
        .zip(prior.means.iter().zip(&prior.stds))
        .map(|(t, (m, s))| (t - m).powi(2) / (2.0 * s * s))
        .sum())
}

fn fixed_sigma(spec: &ModelSpec) -> Result<f64> {
    match spec.noise {
        NoiseSpec::FixedHomoscedastic { sigma } => Ok(sigma),
        other => Err(VfmError::Config(format!(
            "MAP estimation requires a fixed homoscedastic noise model, got {other:?}"
        ))),
    }
}

fn check_setup(fit: &[Observation], val: &[Observation], prior: &PriorSpec, spec: &ModelSpec, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    spec.noise.validate()?;
    prior.validate()?;
    if prior.len() != spec.num_params() {
        return Err(VfmError::dim("prior", spec.num_params(), prior.len()));
    }
    if fit.is_empty() || val.is_empty() {
        return Err(VfmError::Data(format!(
            "training needs non-empty fitting and validation sets (got {} and {})",
            fit.len(),
            val.len()
        )));
    }
    Ok(())
}

fn initial_draw(prior: &PriorSpec, rng: &mut Rng) -> Vec<f64> {
    let mut zeta = vec![0.0; prior.len()];
    sample_standard_normal(rng, &mut zeta);
    prior
        .means
        .iter()
        .zip(&prior.stds)
        .zip(&zeta)
        .map(|((m, s), z)| m + s * z)
        .collect()
}

/// Early-stopping bookkeeping shared by both training loops.
struct EarlyStopping<P> {
    patience: usize,
    best: Option<(P, f64, usize)>,
    since_best: usize,
}

impl<P: Clone> EarlyStopping<P> {
    fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
            since_best: 0,
        }
    }

    /// Records an epoch; returns true when training should stop.
    fn observe(&mut self, epoch: usize, val: f64, params: &P) -> bool {
        let improved = self.best.as_ref().map_or(true, |(_, b, _)| val < *b);
        if improved {
            self.best = Some((params.clone(), val, epoch));
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        self.since_best >= self.patience
    }

    fn finish(self, train_history: Vec<f64>, val_history: Vec<f64>) -> TrainResult<P> {
        let (params, best_val_loss, best_epoch) = self.best.expect("at least one epoch recorded");
        TrainResult {
            params,
            stopping_epoch: train_history.len(),
            train_history,
            val_history,
            best_epoch,
            best_val_loss,
        }
    }
}

/// MAP estimation on a random train/validation split of `data`.
pub fn map_fit(
    data: &[Observation],
    prior: &PriorSpec,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainResult<ParameterVector>> {
    cfg.validate()?;
    let (fit, val) = validation_split(data, cfg.validation_fraction, derive_seed(cfg.seed, 1))?;
    map_fit_with_validation(&fit, &val, prior, spec, cfg)
}

/// MAP estimation with an explicit validation set.
pub fn map_fit_with_validation(
    fit: &[Observation],
    val: &[Observation],
    prior: &PriorSpec,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainResult<ParameterVector>> {
    let sigma = fixed_sigma(spec)?;
    check_setup(fit, val, prior, spec, cfg)?;
    let mut rng = rng(derive_seed(cfg.seed, 2));
    let n = fit.len();
    let batch = cfg.batch_size.min(n);
    let mut theta = initial_draw(prior, &mut rng);
    let mut adam = AdamState::new(theta.len());
    let mut grad = vec![0.0; theta.len()];
    let mut order: Vec<usize> = (0..n).collect();
    let const_term = 0.5 * (2.0 * std::f64::consts::PI * sigma * sigma).ln();
    let mut stopper = EarlyStopping::new(cfg.patience.max(1));
    let (mut train_history, mut val_history) = (Vec::new(), Vec::new());

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut steps = 0;
        for (step, chunk) in order.chunks(batch).enumerate() {
            grad.fill(0.0);
            let b = chunk.len() as f64;
            let mut data_term = 0.0;
            {
                let mut point = PointLikelihood::new(spec, &theta)?;
                for &i in chunk {
                    data_term += -point.log_density_grad(&fit[i], -1.0 / b, &mut grad) - const_term;
                }
            }
            prior.add_log_density_grad(&theta, -1.0 / n as f64, &mut grad);
            let loss = data_term / b + prior_penalty(&theta, prior)? / n as f64;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(VfmError::Divergence { epoch, step, loss });
            }
            adam_update(&mut theta, &grad, &mut adam, cfg.learning_rate);
            epoch_loss += loss;
            steps += 1;
        }
        let val_loss = {
            let mut point = PointLikelihood::new(spec, &theta)?;
            -val.iter().map(|o| point.log_density(o)).sum::<f64>() / val.len() as f64
        };
        if !val_loss.is_finite() {
            return Err(VfmError::Divergence {
                epoch,
                step: steps,
                loss: val_loss,
            });
        }
        train_history.push(epoch_loss / steps as f64);
        val_history.push(val_loss);
        log::debug!("map epoch {epoch}: train {:.6} val {val_loss:.6}", epoch_loss / steps as f64);
        if stopper.observe(epoch, val_loss, &theta) {
            break;
        }
    }
    let result = stopper.finish(train_history, val_history);
    Ok(TrainResult {
        params: ParameterVector(result.params),
        train_history: result.train_history,
        val_history: result.val_history,
        best_epoch: result.best_epoch,
        stopping_epoch: result.stopping_epoch,
        best_val_loss: result.best_val_loss,
    })
}

/// Stochastic gradient variational Bayes on a random train/validation split of `data`.
pub fn vi_fit(
    data: &[Observation],
    prior: &PriorSpec,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainResult<VariationalParams>> {
    cfg.validate()?;
    let (fit, val) = validation_split(data, cfg.validation_fraction, derive_seed(cfg.seed, 1))?;
    vi_fit_with_validation(&fit, &val, prior, spec, cfg)
}

/// Validation loss for VI: negative ELBO per point, with the expected log-likelihood
/// taken on the validation set and the KL amortized over the fitting set.
fn vi_validation_loss(
    val: &[Observation],
    n_fit: usize,
    q: &VariationalParams,
    prior: &PriorSpec,
    spec: &ModelSpec,
    zetas: &[Vec<f64>],
    theta: &mut [f64],
) -> Result<f64> {
    let mut expected = 0.0;
    for zeta in zetas {
        reparameterize_into(q, zeta, theta);
        let mut point = PointLikelihood::new(spec, theta)?;
        expected += val.iter().map(|o| point.log_density(o)).sum::<f64>();
    }
    let per_point = expected / (zetas.len() * val.len()) as f64;
    Ok(-(per_point - kl_mean_field(q, prior)? / n_fit as f64))
}

/// SGVB with an explicit validation set.
pub fn vi_fit_with_validation(
    fit: &[Observation],
    val: &[Observation],
    prior: &PriorSpec,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainResult<VariationalParams>> {
    check_setup(fit, val, prior, spec, cfg)?;
    let mut init_rng = rng(derive_seed(cfg.seed, 3));
    let q0 = VariationalParams::init_from_prior(prior, cfg.init_std_scale, &mut init_rng);
    vi_train(fit, val, q0, prior, spec, cfg)
}

/// SGVB starting from a given variational state.
pub fn vi_train(
    fit: &[Observation],
    val: &[Observation],
    mut q: VariationalParams,
    prior: &PriorSpec,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainResult<VariationalParams>> {
    check_setup(fit, val, prior, spec, cfg)?;
    if q.len() != spec.num_params() {
        return Err(VfmError::dim("variational parameters", spec.num_params(), q.len()));
    }
    let k = q.len();
    let n = fit.len();
    let batch = cfg.batch_size.min(n);
    let mut rng = rng(derive_seed(cfg.seed, 4));
    let mut val_rng = rng_for_validation(cfg.seed);
    let val_zetas: Vec<Vec<f64>> = (0..cfg.validation_samples)
        .map(|_| {
            let mut z = vec![0.0; k];
            sample_standard_normal(&mut val_rng, &mut z);
            z
        })
        .collect();

    let mut ws = ElboWorkspace::new(k);
    let mut zetas = vec![vec![0.0; k]; cfg.mc_samples];
    let mut grad_mu = vec![0.0; k];
    let mut grad_rho = vec![0.0; k];
    let mut adam_mu = AdamState::new(k);
    let mut adam_rho = AdamState::new(k);
    let mut theta = vec![0.0; k];
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch_data = Vec::with_capacity(batch);
    let mut stopper = EarlyStopping::new(cfg.patience.max(1));
    let (mut train_history, mut val_history) = (Vec::new(), Vec::new());

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut steps = 0;
        for (step, chunk) in order.chunks(batch).enumerate() {
            batch_data.clear();
            batch_data.extend(chunk.iter().map(|&i| fit[i]));
            for z in zetas.iter_mut() {
                sample_standard_normal(&mut rng, z);
            }
            let elbo = ws.value_and_grad(&batch_data, &q, prior, spec, &zetas, n, &mut grad_mu, &mut grad_rho);
            let elbo = match elbo {
                Ok(v) => v,
                Err(_) => return Err(VfmError::Divergence { epoch, step, loss: f64::NAN }),
            };
            let loss = -elbo / n as f64;
            // Descend on the negative ELBO per point.
            let inv_n = -1.0 / n as f64;
            grad_mu.iter_mut().for_each(|g| *g *= inv_n);
            grad_rho.iter_mut().for_each(|g| *g *= inv_n);
            if grad_mu.iter().chain(&grad_rho).any(|g| !g.is_finite()) {
                return Err(VfmError::Divergence { epoch, step, loss });
            }
            adam_update(&mut q.mu, &grad_mu, &mut adam_mu, cfg.learning_rate);
            adam_update(&mut q.rho, &grad_rho, &mut adam_rho, cfg.learning_rate);
            epoch_loss += loss;
            steps += 1;
        }
        let val_loss = vi_validation_loss(val, n, &q, prior, spec, &val_zetas, &mut theta)?;
        if !val_loss.is_finite() {
            return Err(VfmError::Divergence {
                epoch,
                step: steps,
                loss: val_loss,
            });
        }
        train_history.push(epoch_loss / steps as f64);
        val_history.push(val_loss);
        log::debug!("vi epoch {epoch}: train {:.6} val {val_loss:.6}", epoch_loss / steps as f64);
        if stopper.observe(epoch, val_loss, &q) {
            break;
        }
    }
    Ok(stopper.finish(train_history, val_history))
}

fn rng_for_validation(seed: u64) -> Rng {
    rng(derive_seed(seed, 5))
}
