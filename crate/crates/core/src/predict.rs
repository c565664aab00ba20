//! Point predictions and Monte-Carlo summaries of the posterior predictive distribution.

use std::io::Write;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::StandardizationStats;
use crate::error::{Result, VfmError};
use crate::evaluation::PredictiveDistribution;
use crate::inference::{reparameterize, Checkpoint, FittedParams, VariationalParams};
use crate::model::{FlowFeatures, ModelSpec, PointLikelihood};
use crate::stats::{derive_seed, quantile_sorted, rng, sort_floats, std_pop};

/// Sample count for reported predictions.
pub const DEFAULT_REPORT_SAMPLES: usize = 1000;
/// Sample count for calibration sweeps.
pub const DEFAULT_CALIBRATION_SAMPLES: usize = 200;
/// Quantile levels written to prediction files.
pub const CSV_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Monte-Carlo summary of the predictive distribution at one input, in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSummary {
    pub mean: f64,
    /// Spread of the conditional mean `f(x, phi)` across posterior draws.
    pub std_epistemic: f64,
    /// Root-mean-square of the sampled noise standard deviations.
    pub std_aleatoric: f64,
    /// Spread of the sampled measurements.
    pub std_total: f64,
    pub median: f64,
    /// Centred intervals from the empirical quantiles `(1 -+ level) / 2`.
    pub intervals: Vec<Interval>,
    /// `CSV_QUANTILES` of the sampled measurements.
    pub quantiles: [f64; 5],
    pub samples: usize,
}

/// Draws at one input, physical units. `y` is sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDraws {
    pub z: Vec<f64>,
    pub noise_std: Vec<f64>,
    pub y: Vec<f64>,
}

impl PredictiveDraws {
    pub fn summarize(&self, levels: &[f64]) -> PredictiveSummary {
        let n = self.y.len() as f64;
        let intervals = levels
            .iter()
            .map(|&level| {
                let (lower, upper) = self.centered_interval(level);
                Interval { level, lower, upper }
            })
            .collect();
        PredictiveSummary {
            mean: self.z.iter().sum::<f64>() / n,
            std_epistemic: std_pop(&self.z),
            std_aleatoric: (self.noise_std.iter().map(|s| s * s).sum::<f64>() / n).sqrt(),
            std_total: std_pop(&self.y),
            median: quantile_sorted(&self.y, 0.5),
            intervals,
            quantiles: CSV_QUANTILES.map(|p| quantile_sorted(&self.y, p)),
            samples: self.y.len(),
        }
    }
}

impl PredictiveDistribution for PredictiveDraws {
    fn centered_interval(&self, level: f64) -> (f64, f64) {
        let level = level.clamp(0.0, 1.0);
        (
            quantile_sorted(&self.y, (1.0 - level) / 2.0),
            quantile_sorted(&self.y, (1.0 + level) / 2.0),
        )
    }
}

/// Posterior predictive sampler: a fixed set of parameter draws plus per-input noise streams.
///
/// Draw `s` uses parameter draw `s % n_draws`, so a MAP point estimate yields the
/// predictive `N(f(x, theta), g^2)` and a variational posterior yields one parameter
/// draw per sample.
#[derive(Debug, Clone)]
pub struct PredictiveSampler {
    spec: ModelSpec,
    stats: StandardizationStats,
    thetas: Vec<Vec<f64>>,
    samples: usize,
    seed: u64,
}

impl PredictiveSampler {
    /// Draws `samples` parameter vectors from `q`.
    pub fn from_variational(
        spec: &ModelSpec,
        stats: &StandardizationStats,
        q: &VariationalParams,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if samples < 2 {
            return Err(VfmError::Config("posterior predictive needs at least two samples".into()));
        }
        if q.len() != spec.num_params() {
            return Err(VfmError::dim("variational parameters", spec.num_params(), q.len()));
        }
        if q.is_empty() || !q.is_finite() {
            return Err(VfmError::NonFiniteInput("variational parameters"));
        }
        let mut rng = rng(derive_seed(seed, 0x7e7a));
        let mut zeta = vec![0.0; q.len()];
        let thetas = (0..samples)
            .map(|_| {
                for z in zeta.iter_mut() {
                    *z = rng.sample(StandardNormal);
                }
                reparameterize(q, &zeta).map(|t| t.0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PredictiveSampler {
            spec: spec.clone(),
            stats: stats.clone(),
            thetas,
            samples,
            seed,
        })
    }

    /// Predictive of a point estimate: only the measurement noise is sampled.
    pub fn from_point(
        spec: &ModelSpec,
        stats: &StandardizationStats,
        theta: &[f64],
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if samples < 2 {
            return Err(VfmError::Config("posterior predictive needs at least two samples".into()));
        }
        spec.split(theta)?;
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(VfmError::NonFiniteInput("parameter vector"));
        }
        Ok(PredictiveSampler {
            spec: spec.clone(),
            stats: stats.clone(),
            thetas: vec![theta.to_vec()],
            samples,
            seed,
        })
    }

    pub fn from_checkpoint(ckpt: &Checkpoint, samples: usize, seed: u64) -> Result<Self> {
        match &ckpt.params {
            FittedParams::Map { theta } => Self::from_point(&ckpt.model, &ckpt.standardization, &theta.0, samples, seed),
            FittedParams::Vi { .. } => Self::from_variational(
                &ckpt.model,
                &ckpt.standardization,
                &ckpt.params.variational().unwrap(),
                samples,
                seed,
            ),
        }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Draws for a batch of inputs. Input `i` uses noise stream `i`, so results do not
    /// depend on how a caller batches its inputs as long as indices are kept.
    pub fn draws(&self, inputs: &[FlowFeatures]) -> Result<Vec<PredictiveDraws>> {
        self.draws_indexed(inputs.iter().enumerate().map(|(i, x)| (i as u64, *x)))
    }

    pub fn draws_indexed(&self, inputs: impl IntoIterator<Item = (u64, FlowFeatures)>) -> Result<Vec<PredictiveDraws>> {
        let inputs: Vec<(u64, [f64; 7])> = inputs
            .into_iter()
            .map(|(i, x)| (i, self.stats.standardize_features(&x)))
            .collect();
        let n_theta = self.thetas.len();
        // Evaluate every distinct parameter draw at every input once.
        let mut mean_std = vec![vec![(0.0, 0.0); n_theta]; inputs.len()];
        for (t, theta) in self.thetas.iter().enumerate() {
            let mut point = PointLikelihood::new(&self.spec, theta)?;
            for (i, (_, x)) in inputs.iter().enumerate() {
                mean_std[i][t] = point.predict(x);
            }
        }
        let mut out = Vec::with_capacity(inputs.len());
        for (i, (index, _)) in inputs.iter().enumerate() {
            let mut rng = rng(derive_seed(self.seed, *index));
            let mut z = Vec::with_capacity(self.samples);
            let mut noise_std = Vec::with_capacity(self.samples);
            let mut y = Vec::with_capacity(self.samples);
            for s in 0..self.samples {
                let (zm, sm) = mean_std[i][s % n_theta];
                let eps: f64 = rng.sample(StandardNormal);
                let zp = self.stats.destandardize_target(zm);
                let sp = self.stats.scale_to_physical(sm);
                z.push(zp);
                noise_std.push(sp);
                y.push(zp + sp * eps);
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(VfmError::Numerical(format!("non-finite predictive draw for input {index}")));
            }
            sort_floats(&mut y);
            out.push(PredictiveDraws { z, noise_std, y });
        }
        Ok(out)
    }

    pub fn summarize(&self, inputs: &[FlowFeatures], levels: &[f64]) -> Result<Vec<PredictiveSummary>> {
        Ok(self.draws(inputs)?.iter().map(|d| d.summarize(levels)).collect())
    }
}

/// Monte-Carlo predictive summary for one input under a variational posterior.
pub fn posterior_predictive(
    x: &FlowFeatures,
    q: &VariationalParams,
    spec: &ModelSpec,
    stats: &StandardizationStats,
    samples: usize,
    seed: u64,
    levels: &[f64],
) -> Result<PredictiveSummary> {
    let sampler = PredictiveSampler::from_variational(spec, stats, q, samples, seed)?;
    Ok(sampler.draws(std::slice::from_ref(x))?[0].summarize(levels))
}

/// De-standardized conditional mean `f(x, theta)`.
pub fn map_predict(x: &FlowFeatures, theta: &[f64], spec: &ModelSpec, stats: &StandardizationStats) -> Result<f64> {
    let mut point = PointLikelihood::new(spec, theta)?;
    let (z, _) = point.predict(&stats.standardize_features(x));
    Ok(stats.destandardize_target(z))
}

/// Point predictions in physical units: `f(x, theta)` for a MAP checkpoint, the Monte-Carlo
/// predictive mean with `DEFAULT_REPORT_SAMPLES` draws for a variational one.
pub fn point_predictions(ckpt: &Checkpoint, inputs: &[FlowFeatures], seed: u64) -> Result<Vec<f64>> {
    match &ckpt.params {
        FittedParams::Map { theta } => inputs
            .iter()
            .map(|x| map_predict(x, &theta.0, &ckpt.model, &ckpt.standardization))
            .collect(),
        FittedParams::Vi { .. } => {
            let sampler = PredictiveSampler::from_checkpoint(ckpt, DEFAULT_REPORT_SAMPLES, seed)?;
            Ok(sampler.summarize(inputs, &[])?.iter().map(|s| s.mean).collect())
        }
    }
}

/// Column order of prediction files.
pub const PREDICTION_HEADER: [&str; 16] = [
    "u", "p1", "p2", "T1", "T2", "eta_oil", "eta_gas", "mean", "std_epistemic", "std_aleatoric", "std_total", "q05",
    "q25", "q50", "q75", "q95",
];

pub fn write_predictions_csv(
    writer: impl Write,
    inputs: &[FlowFeatures],
    summaries: &[PredictiveSummary],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(PREDICTION_HEADER)?;
    for (x, s) in inputs.iter().zip(summaries) {
        let mut row: Vec<String> = x.to_array().iter().map(|v| v.to_string()).collect();
        row.extend(
            [s.mean, s.std_epistemic, s.std_aleatoric, s.std_total]
                .iter()
                .chain(s.quantiles.iter())
                .map(|v| v.to_string()),
        );
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| VfmError::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_predictions_csv(path: impl AsRef<Path>, inputs: &[FlowFeatures], summaries: &[PredictiveSummary]) -> Result<()> {
    let file = std::fs::File::create(path.as_ref()).map_err(|e| VfmError::io(path.as_ref(), e))?;
    write_predictions_csv(file, inputs, summaries)
}
