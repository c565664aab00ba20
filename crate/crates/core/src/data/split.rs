use chrono::Duration;
use serde::{Deserialize, Serialize};

use super::WellDataset;
use crate::error::{Result, VfmError};
use crate::stats::rng;

/// Length of the held-out test window.
pub const DEFAULT_WINDOW_DAYS: f64 = 90.0;

/// Which chronological test window to hold out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    /// A contiguous window in the middle of the record.
    Historical,
    /// The final window.
    Future,
}

impl SplitKind {
    pub fn apply(self, dataset: &WellDataset, window_days: f64) -> Result<(WellDataset, WellDataset)> {
        match self {
            SplitKind::Historical => split_historical(dataset, window_days),
            SplitKind::Future => split_future(dataset, window_days),
        }
    }
}

fn window(window_days: f64) -> Result<Duration> {
    if !(window_days > 0.0 && window_days.is_finite()) {
        return Err(VfmError::Config(format!("test window must be positive, got {window_days} days")));
    }
    Ok(Duration::milliseconds((window_days * 86_400_000.0).round() as i64))
}

fn check_span(dataset: &WellDataset, window_days: f64) -> Result<()> {
    let span = dataset.span_days();
    if span <= 3.0 * window_days {
        return Err(VfmError::Data(format!(
            "dataset spans {span:.1} days; a {window_days}-day test window needs more than {} days",
            3.0 * window_days
        )));
    }
    Ok(())
}

fn partition(dataset: &WellDataset, in_test: impl Fn(usize) -> bool) -> Result<(WellDataset, WellDataset)> {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, r) in dataset.records().iter().enumerate() {
        if in_test(i) {
            test.push(*r);
        } else {
            train.push(*r);
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(VfmError::Data(format!(
            "degenerate split: {} training and {} test records",
            train.len(),
            test.len()
        )));
    }
    Ok((WellDataset::from_sorted(train), WellDataset::from_sorted(test)))
}

/// Holds out the window of `window_days` centred on the midpoint of the record.
/// Returns `(train, test)`; both keep chronological order.
pub fn split_historical(dataset: &WellDataset, window_days: f64) -> Result<(WellDataset, WellDataset)> {
    let w = window(window_days)?;
    check_span(dataset, window_days)?;
    let records = dataset.records();
    let first = records[0].timestamp;
    let last = records[records.len() - 1].timestamp;
    let mid = first + (last - first) / 2;
    let start = mid - w / 2;
    let end = start + w;
    partition(dataset, |i| {
        let t = records[i].timestamp;
        t >= start && t < end
    })
}

/// Holds out the final `window_days` of the record.
pub fn split_future(dataset: &WellDataset, window_days: f64) -> Result<(WellDataset, WellDataset)> {
    let w = window(window_days)?;
    check_span(dataset, window_days)?;
    let records = dataset.records();
    let start = records[records.len() - 1].timestamp - w;
    partition(dataset, |i| records[i].timestamp > start)
}

/// Uniform random split without replacement into `(fit, validation)`; both parts keep the
/// input order. The validation part has `round(fraction * n)` items.
pub fn validation_split<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(VfmError::Config(format!("validation fraction must lie in (0, 1), got {fraction}")));
    }
    let n = items.len();
    let n_val = (fraction * n as f64).round() as usize;
    if n_val == 0 || n_val >= n {
        return Err(VfmError::Data(format!(
            "validation split of {n} items at fraction {fraction} leaves an empty part"
        )));
    }
    let mut rng = rng(seed);
    let mut chosen = vec![false; n];
    for i in rand::seq::index::sample(&mut rng, n, n_val) {
        chosen[i] = true;
    }
    let (mut fit, mut val) = (Vec::with_capacity(n - n_val), Vec::with_capacity(n_val));
    for (item, &is_val) in items.iter().zip(&chosen) {
        if is_val {
            val.push(item.clone());
        } else {
            fit.push(item.clone());
        }
    }
    Ok((fit, val))
}
