//! Output variance of networks drawn from the He-prior, for several depths.

use bayes_vfm::model::{forward_mean, he_prior, Architecture};
use bayes_vfm::stats::{mean, rng, std_pop};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> bayes_vfm::Result<()> {
    let mut r = rng(1);
    for depth in [1, 2, 3, 5, 8] {
        let arch = Architecture::with_hidden(&vec![50; depth])?;
        let prior = he_prior(&arch, 0.1)?;
        let mut out = Vec::new();
        for _ in 0..300 {
            let w: Vec<f64> = prior.stds.iter().map(|s| s * r.sample::<f64, _>(StandardNormal)).collect();
            for _ in 0..20 {
                let x: Vec<f64> = (0..7).map(|_| r.sample(StandardNormal)).collect();
                out.push(forward_mean(&x, &w, &arch)?);
            }
        }
        println!("depth {depth}: output mean {:+.3}, variance {:.3}", mean(&out), std_pop(&out).powi(2));
    }
    Ok(())
}
