//! A small training-size study: relative test error R_k of MAP networks as the
//! training window grows backwards in time.
//!
//! ```text
//! cargo run --release --example size_study -- [trials] [stationary|drifting]
//! ```

use bayes_vfm::cli::{run_size_study, SizeStudyConfig};
use bayes_vfm::data::SyntheticWellConfig;

fn main() -> bayes_vfm::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().map_or(10, |v| v.parse().expect("trials"));
    let well = match args.next().as_deref() {
        Some("drifting") => SyntheticWellConfig::drifting(),
        _ => SyntheticWellConfig::default(),
    };
    let mut cfg = SizeStudyConfig {
        trials,
        well: SyntheticWellConfig { records: 1200, ..well },
        ..SizeStudyConfig::default()
    };
    cfg.fit.hidden = vec![50];
    let report = run_size_study(&cfg)?;
    println!("{:>6} {:>8} {:>8} {:>8}", "k", "median", "p25", "p75");
    for s in &report.summary {
        println!("{:>6} {:>8.3} {:>8.3} {:>8.3}", s.size, s.median, s.p25, s.p75);
    }
    Ok(())
}
