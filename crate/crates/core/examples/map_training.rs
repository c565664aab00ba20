//! Fit a MAP network with fixed noise on a synthetic well and report test errors.
//!
//! ```text
//! cargo run --release --example map_training -- [hidden widths, e.g. 50,50,50]
//! ```

use bayes_vfm::data::{generate_synthetic_well, split_historical, SyntheticWellConfig};
use bayes_vfm::evaluation::{mape, rmse};
use bayes_vfm::inference::{fit_dataset, FitOptions, Method, NoiseKind};
use bayes_vfm::predict::point_predictions;

fn main() -> bayes_vfm::Result<()> {
    let hidden: Vec<usize> = std::env::args()
        .nth(1)
        .map_or(vec![50, 50, 50], |s| s.split(',').map(|v| v.parse().expect("width")).collect());
    let well = generate_synthetic_well(&SyntheticWellConfig::default(), 11)?;
    let (train, test) = split_historical(&well.dataset, 90.0)?;

    let opts = FitOptions {
        method: Method::Map,
        noise: NoiseKind::Fixed,
        hidden,
        ..FitOptions::default()
    };
    let ckpt = fit_dataset(&train, &opts)?;
    let summary = ckpt.training.as_ref().expect("training summary");
    println!(
        "best epoch {} of {}, validation NLL {:.4}",
        summary.best_epoch, summary.stopping_epoch, summary.best_val_loss
    );

    let pred = point_predictions(&ckpt, &test.features(), 0)?;
    let y = test.targets();
    println!("test MAPE {:.2}%  RMSE {:.3}  ({} points)", mape(&y, &pred)?, rmse(&y, &pred)?, y.len());
    Ok(())
}
