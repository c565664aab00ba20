//! Noise priors derived from an instrument's mean absolute percentage error.

use bayes_vfm::model::{
    absolute_noise_log_mean, noise_prior_from_mape, relative_noise_log_mean, NoisePriorConfig, NoiseSpec, SQRT_HALF_PI,
};
use bayes_vfm::stats::rng;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> bayes_vfm::Result<()> {
    let mut r = rng(3);
    for er in [0.01, 0.025, 0.1] {
        for d in [0.0, 0.5, 1.0] {
            let c = relative_noise_log_mean(er, d);
            let n = 200_000;
            let m = (0..n).map(|_| (c + d * r.sample::<f64, _>(StandardNormal)).exp()).sum::<f64>() / n as f64;
            println!("Er {er:<5} d {d}: c2 = {c:+.4}, E[exp(psi2)] = {m:.5} (target {:.5})", SQRT_HALF_PI * er);
        }
    }
    println!("\nhomoscedastic, Er 0.1, mean flow 10, d 0: c1 = {:.4}", absolute_noise_log_mean(0.1, 10.0, 0.0));

    let cfg = NoisePriorConfig::new(0.1, 0.5);
    let hetero = noise_prior_from_mape(&cfg, Some(4.2), &NoiseSpec::LearnedHeteroscedastic { offset: 4.2 })?;
    println!("heteroscedastic prior (floor, slope): means {:?}, stds {:?}", hetero.means, hetero.stds);
    Ok(())
}
