//! Save a trained model to JSON, load it back and check predictions are unchanged.

use bayes_vfm::data::{generate_synthetic_well, SyntheticWellConfig};
use bayes_vfm::inference::{fit_dataset, Checkpoint, FitOptions};
use bayes_vfm::predict::PredictiveSampler;

fn main() -> bayes_vfm::Result<()> {
    let well = generate_synthetic_well(&SyntheticWellConfig { records: 400, ..SyntheticWellConfig::default() }, 2)?;
    let mut opts = FitOptions { hidden: vec![16], ..FitOptions::default() };
    opts.train.max_epochs = 100;
    let ckpt = fit_dataset(&well.dataset, &opts)?;

    let path = std::env::temp_dir().join("bayes_vfm_example_checkpoint.json");
    ckpt.save(&path)?;
    let loaded = Checkpoint::load(&path)?;
    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));
    assert_eq!(loaded, ckpt);

    let inputs = well.dataset.features();
    let a = PredictiveSampler::from_checkpoint(&ckpt, 200, 9)?.summarize(&inputs[..5], &[0.9])?;
    let b = PredictiveSampler::from_checkpoint(&loaded, 200, 9)?.summarize(&inputs[..5], &[0.9])?;
    assert_eq!(a, b);
    for s in &a {
        println!("mean {:.3}, 90% [{:.3}, {:.3}]", s.mean, s.intervals[0].lower, s.intervals[0].upper);
    }
    Ok(())
}
