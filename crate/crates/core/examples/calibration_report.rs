//! Calibration of a variational model on held-out data, grouped into a report.

use bayes_vfm::data::{generate_synthetic_well, split_historical, MeterType, SyntheticWellConfig};
use bayes_vfm::evaluation::{default_calibration_levels, default_thresholds, EvaluationReport, WellEvaluation};
use bayes_vfm::inference::{fit_dataset, FitOptions};
use bayes_vfm::predict::PredictiveSampler;

fn main() -> bayes_vfm::Result<()> {
    let levels = default_calibration_levels();
    let mut wells = Vec::new();
    for (i, meter) in [MeterType::Mpfm, MeterType::Mpfm, MeterType::TestSeparator].into_iter().enumerate() {
        let records = if meter == MeterType::Mpfm { 1500 } else { 300 };
        let cfg = SyntheticWellConfig { meter, records, ..SyntheticWellConfig::default() };
        let well = generate_synthetic_well(&cfg, 20 + i as u64)?;
        let (train, test) = split_historical(&well.dataset, if meter == MeterType::Mpfm { 90.0 } else { 600.0 })?;
        let mut opts = FitOptions { hidden: vec![50], ..FitOptions::default() };
        opts.train.seed = i as u64;
        let ckpt = fit_dataset(&train, &opts)?;
        let draws = PredictiveSampler::from_checkpoint(&ckpt, 200, 1)?.draws(&test.features())?;
        let mean: Vec<f64> = draws.iter().map(|d| d.z.iter().sum::<f64>() / d.z.len() as f64).collect();
        wells.push(WellEvaluation::probabilistic(format!("well-{i}"), meter, &test.targets(), &mean, &draws, &levels)?);
    }
    let report = EvaluationReport::from_wells(wells, &default_thresholds())?;
    for w in &report.wells {
        println!("{} ({}): MAPE {:.2}%, 95% coverage {:.3}", w.well, w.meter.as_str(), w.mape, w.coverage_95.unwrap_or(f64::NAN));
    }
    let mut csv = Vec::new();
    report.write_calibration_csv(&mut csv)?;
    print!("\n{}", String::from_utf8_lossy(&csv));
    Ok(())
}
