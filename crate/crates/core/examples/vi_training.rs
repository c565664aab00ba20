//! Variational training with learned heteroscedastic noise, then a look at the
//! predictive distribution for a few test points.

use bayes_vfm::data::{generate_synthetic_well, split_historical, SyntheticWellConfig};
use bayes_vfm::inference::{fit_dataset, FitOptions};
use bayes_vfm::predict::PredictiveSampler;

fn main() -> bayes_vfm::Result<()> {
    env_logger::init();
    let well = generate_synthetic_well(&SyntheticWellConfig::default(), 5)?;
    let (train, test) = split_historical(&well.dataset, 90.0)?;

    let mut opts = FitOptions {
        hidden: vec![50],
        ..FitOptions::default()
    };
    opts.train.seed = 5;
    let ckpt = fit_dataset(&train, &opts)?;
    let q = ckpt.params.variational().expect("variational posterior");
    let n = q.len();
    let sigma = q.sigma();
    println!("{n} parameters; noise floor psi1 = {:.3} +- {:.3}, slope psi2 = {:.3} +- {:.3}",
        q.mu[n - 2], sigma[n - 2], q.mu[n - 1], sigma[n - 1]);

    let sampler = PredictiveSampler::from_checkpoint(&ckpt, 1000, 0)?;
    let inputs: Vec<_> = test.features().into_iter().step_by(30).collect();
    let truth: Vec<f64> = test.targets().into_iter().step_by(30).collect();
    println!("{:>8} {:>8} {:>8} {:>8} {:>17}", "y", "mean", "epist", "aleat", "95% interval");
    for (s, y) in sampler.summarize(&inputs, &[0.95])?.iter().zip(truth) {
        let iv = s.intervals[0];
        println!("{y:8.2} {:8.2} {:8.3} {:8.3}   [{:.2}, {:.2}]", s.mean, s.std_epistemic, s.std_aleatoric, iv.lower, iv.upper);
    }
    Ok(())
}
