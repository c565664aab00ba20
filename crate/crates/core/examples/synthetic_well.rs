//! Generate a stationary and a drifting well and print a short summary of each.
//!
//! ```text
//! cargo run --example synthetic_well -- [records] [seed]
//! ```

use bayes_vfm::data::{generate_synthetic_well, split_future, split_historical, SyntheticWellConfig};
use bayes_vfm::stats::mean;

fn main() -> bayes_vfm::Result<()> {
    let mut args = std::env::args().skip(1);
    let records: usize = args.next().map_or(1500, |v| v.parse().expect("records"));
    let seed: u64 = args.next().map_or(7, |v| v.parse().expect("seed"));

    for (name, base) in [("stationary", SyntheticWellConfig::default()), ("drifting", SyntheticWellConfig::drifting())] {
        let cfg = SyntheticWellConfig { records, ..base };
        let well = generate_synthetic_well(&cfg, seed)?;
        let data = &well.dataset;
        let y = data.targets();
        let quarter = y.len() / 4;
        println!(
            "{name}: {} records over {:.0} days, mean flow {:.1} (first quarter {:.1}, last quarter {:.1})",
            data.len(),
            data.span_days(),
            mean(&y),
            mean(&y[..quarter]),
            mean(&y[y.len() - quarter..]),
        );
        let (train, test) = split_historical(data, 90.0)?;
        println!("  historical split: {} train / {} test", train.len(), test.len());
        let (train, test) = split_future(data, 90.0)?;
        println!("  future split:     {} train / {} test", train.len(), test.len());
    }

    let cfg = SyntheticWellConfig { records: 5, ..SyntheticWellConfig::default() };
    let mut out = Vec::new();
    generate_synthetic_well(&cfg, seed)?.dataset.to_csv_writer(&mut out)?;
    print!("\n{}", String::from_utf8_lossy(&out));
    Ok(())
}
