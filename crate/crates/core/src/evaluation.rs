//! Error metrics, calibration and coverage, per-group reports and the training-size study.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{MeterType, WellDataset};
use crate::error::{Result, VfmError};
use crate::stats::{quantile_sorted, sort_floats};

/// Report percentile levels, in percent.
pub const REPORT_PERCENTILES: [f64; 5] = [10.0, 25.0, 50.0, 75.0, 90.0];
/// Training-set sizes of the size study.
pub const SIZE_STUDY_SIZES: [usize; 11] = [150, 200, 300, 400, 500, 600, 700, 800, 900, 1000, 1100];
/// Held-out points at the end of each size-study well.
pub const SIZE_STUDY_TEST_POINTS: usize = 100;
/// Validation points taken from the end of each size-study training set.
pub const SIZE_STUDY_VALIDATION_POINTS: usize = 100;

/// Calibration levels 0.05, 0.10, ..., 0.95.
pub fn default_calibration_levels() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// Deviation thresholds in percent for cumulative-performance curves.
pub fn default_thresholds() -> Vec<f64> {
    (0..=50).map(|i| i as f64).collect()
}

/// Anything that can report a centred predictive interval.
pub trait PredictiveDistribution {
    fn centered_interval(&self, level: f64) -> (f64, f64);
}

fn check_lengths(y_true: &[f64], y_pred: &[f64]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(VfmError::dim("predictions", y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(VfmError::Data("no test points".into()));
    }
    Ok(())
}

fn relative_deviations(y_true: &[f64], y_pred: &[f64]) -> Result<Vec<f64>> {
    check_lengths(y_true, y_pred)?;
    y_true
        .iter()
        .zip(y_pred)
        .enumerate()
        .map(|(i, (&t, &p))| {
            if t == 0.0 {
                Err(VfmError::Data(format!("true value at index {i} is zero")))
            } else {
                Ok(100.0 * (t - p).abs() / t.abs())
            }
        })
        .collect()
}

/// Mean absolute percentage error, in percent.
pub fn mape(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    let d = relative_deviations(y_true, y_pred)?;
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    let ss: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok((ss / y_true.len() as f64).sqrt())
}

/// Percentiles by linear interpolation between closest ranks; `levels` in percent.
pub fn percentiles(values: &[f64], levels: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(VfmError::Data("percentiles of an empty sample".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(VfmError::NonFiniteInput("percentile sample"));
    }
    let mut sorted = values.to_vec();
    sort_floats(&mut sorted);
    Ok(levels.iter().map(|&l| quantile_sorted(&sorted, l / 100.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileSummary {
    pub p10: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
}

impl PercentileSummary {
    pub fn of(values: &[f64]) -> Result<Self> {
        let p = percentiles(values, &REPORT_PERCENTILES)?;
        Ok(PercentileSummary {
            p10: p[0],
            p25: p[1],
            p50: p[2],
            p75: p[3],
            p90: p[4],
        })
    }

    pub fn is_monotone(&self) -> bool {
        self.p10 <= self.p25 && self.p25 <= self.p50 && self.p50 <= self.p75 && self.p75 <= self.p90
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
}

/// Fraction of points whose percentage deviation is at most each threshold.
pub fn cumulative_performance(y_true: &[f64], y_pred: &[f64], thresholds: &[f64]) -> Result<Vec<CurvePoint>> {
    if thresholds.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(VfmError::Config("thresholds must be sorted ascending".into()));
    }
    let d = relative_deviations(y_true, y_pred)?;
    Ok(cumulative_from_deviations(&d, thresholds))
}

fn cumulative_from_deviations(deviations: &[f64], thresholds: &[f64]) -> Vec<CurvePoint> {
    let n = deviations.len() as f64;
    thresholds
        .iter()
        .map(|&t| CurvePoint {
            x: t,
            y: deviations.iter().filter(|&&d| d <= t).count() as f64 / n,
        })
        .collect()
}

/// Empirical frequency of measurements inside the centred interval at each level.
/// Levels at or above 1 count every point by construction.
pub fn calibration_curve<D: PredictiveDistribution>(
    y_true: &[f64],
    predictive: &[D],
    levels: &[f64],
) -> Result<Vec<CurvePoint>> {
    if y_true.len() != predictive.len() {
        return Err(VfmError::dim("predictive distributions", y_true.len(), predictive.len()));
    }
    if y_true.is_empty() {
        return Err(VfmError::Data("calibration needs at least one test point".into()));
    }
    let n = y_true.len() as f64;
    Ok(levels
        .iter()
        .map(|&level| {
            let y = if level >= 1.0 {
                1.0
            } else {
                let hits = y_true
                    .iter()
                    .zip(predictive)
                    .filter(|(y, d)| {
                        let (lo, hi) = d.centered_interval(level);
                        lo <= **y && **y <= hi
                    })
                    .count();
                hits as f64 / n
            };
            CurvePoint { x: level, y }
        })
        .collect())
}

pub fn coverage_probability<D: PredictiveDistribution>(y_true: &[f64], predictive: &[D], level: f64) -> Result<f64> {
    Ok(calibration_curve(y_true, predictive, &[level])?[0].y)
}

/// Largest absolute gap between a calibration curve and the diagonal.
pub fn max_calibration_error(curve: &[CurvePoint]) -> f64 {
    curve.iter().map(|p| (p.y - p.x.min(1.0)).abs()).fold(0.0, f64::max)
}

/// Cross-well quartile band of a calibration curve at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBand {
    pub level: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
}

/// Quartiles across wells of per-well calibration curves that share their levels.
pub fn calibration_bands(curves: &[Vec<CurvePoint>]) -> Result<Vec<CalibrationBand>> {
    let first = curves
        .first()
        .ok_or_else(|| VfmError::Data("no calibration curves to aggregate".into()))?;
    for c in curves {
        if c.len() != first.len() || c.iter().zip(first).any(|(a, b)| a.x != b.x) {
            return Err(VfmError::Data("calibration curves use different levels".into()));
        }
    }
    first
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let ys: Vec<f64> = curves.iter().map(|c| c[j].y).collect();
            let q = percentiles(&ys, &[25.0, 50.0, 75.0])?;
            Ok(CalibrationBand {
                level: p.x,
                p25: q[0],
                p50: q[1],
                p75: q[2],
            })
        })
        .collect()
}

/// `R_k = E_k / E_150` for a series of `(k, E_k)`.
pub fn relative_mape_series(errors: &[(usize, f64)]) -> Result<Vec<(usize, f64)>> {
    let base = errors
        .iter()
        .find(|(k, _)| *k == SIZE_STUDY_SIZES[0])
        .map(|(_, e)| *e)
        .ok_or_else(|| VfmError::Data(format!("size study lacks the k = {} baseline", SIZE_STUDY_SIZES[0])))?;
    if !(base > 0.0 && base.is_finite()) {
        return Err(VfmError::Data(format!("baseline error must be positive, got {base}")));
    }
    Ok(errors.iter().map(|&(k, e)| (k, e / base)).collect())
}

/// Median and 50% band of `R_k` across trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeMapeSummary {
    pub size: usize,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub trials: usize,
}

pub fn aggregate_relative_mape(trials: &[Vec<(usize, f64)>]) -> Result<Vec<RelativeMapeSummary>> {
    let mut by_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for t in trials {
        for (k, r) in relative_mape_series(t)? {
            by_size.entry(k).or_default().push(r);
        }
    }
    if by_size.is_empty() {
        return Err(VfmError::Data("no size-study trials".into()));
    }
    by_size
        .into_iter()
        .map(|(size, rs)| {
            let q = percentiles(&rs, &[25.0, 50.0, 75.0])?;
            Ok(RelativeMapeSummary {
                size,
                median: q[1],
                p25: q[0],
                p75: q[2],
                trials: rs.len(),
            })
        })
        .collect()
}

/// Partitions for one size-study trial.
#[derive(Debug, Clone)]
pub struct SizeStudySplit {
    pub fit: WellDataset,
    pub validation: WellDataset,
    pub test: WellDataset,
}

/// The last 100 records are the test set; the `size` records before them form the
/// training set, whose last 100 records are held out for validation. Smaller training
/// sets are therefore nested and reach less far back in time.
pub fn size_study_split(dataset: &WellDataset, size: usize) -> Result<SizeStudySplit> {
    let n = dataset.len();
    let (n_test, n_val) = (SIZE_STUDY_TEST_POINTS, SIZE_STUDY_VALIDATION_POINTS);
    if size <= n_val {
        return Err(VfmError::Config(format!(
            "training size {size} leaves no fitting data after {n_val} validation points"
        )));
    }
    if n < size + n_test {
        return Err(VfmError::Data(format!(
            "size study with {size} training points needs {} records, dataset has {n}",
            size + n_test
        )));
    }
    let test_start = n - n_test;
    let val_start = test_start - n_val;
    Ok(SizeStudySplit {
        fit: dataset.slice(test_start - size..val_start),
        validation: dataset.slice(val_start..test_start),
        test: dataset.slice(test_start..n),
    })
}

/// Spearman rank correlation; ties receive average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(VfmError::Data("spearman needs two equal samples of at least two values".into()));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let (ma, mb) = (crate::stats::mean(&ra), crate::stats::mean(&rb));
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (va * vb).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Test-set results for one well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellEvaluation {
    pub well: String,
    pub meter: MeterType,
    pub n_test: usize,
    pub mape: f64,
    pub rmse: f64,
    /// Percentage deviation of every test point.
    pub deviations: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Vec<CurvePoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_95: Option<f64>,
}

impl WellEvaluation {
    /// Point-prediction metrics only.
    pub fn point(well: impl Into<String>, meter: MeterType, y_true: &[f64], y_pred: &[f64]) -> Result<Self> {
        let deviations = relative_deviations(y_true, y_pred)?;
        Ok(WellEvaluation {
            well: well.into(),
            meter,
            n_test: y_true.len(),
            mape: deviations.iter().sum::<f64>() / deviations.len() as f64,
            rmse: rmse(y_true, y_pred)?,
            deviations,
            calibration: None,
            coverage_95: None,
        })
    }

    /// Point metrics plus calibration at `levels` and coverage of the 95% interval.
    pub fn probabilistic<D: PredictiveDistribution>(
        well: impl Into<String>,
        meter: MeterType,
        y_true: &[f64],
        y_pred: &[f64],
        predictive: &[D],
        levels: &[f64],
    ) -> Result<Self> {
        let mut eval = Self::point(well, meter, y_true, y_pred)?;
        eval.calibration = Some(calibration_curve(y_true, predictive, levels)?);
        eval.coverage_95 = Some(coverage_probability(y_true, predictive, 0.95)?);
        Ok(eval)
    }
}

/// Aggregates for one meter type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub meter: MeterType,
    pub wells: usize,
    pub test_points: usize,
    pub mape: PercentileSummary,
    pub rmse: PercentileSummary,
    /// Pooled over all test points of the group.
    pub cumulative: Vec<CurvePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Vec<CalibrationBand>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_95: Option<PercentileSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub groups: Vec<GroupReport>,
    /// Per-well results, sorted by well name.
    pub wells: Vec<WellEvaluation>,
}

impl EvaluationReport {
    /// Groups wells by meter type. Wells are ordered by name so the result does not depend
    /// on the order in which evaluations finished.
    pub fn from_wells(mut wells: Vec<WellEvaluation>, thresholds: &[f64]) -> Result<Self> {
        if wells.is_empty() {
            return Err(VfmError::Data("no wells to report".into()));
        }
        if thresholds.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(VfmError::Config("thresholds must be sorted ascending".into()));
        }
        wells.sort_by(|a, b| a.well.cmp(&b.well));
        let mut groups = Vec::new();
        for meter in [MeterType::TestSeparator, MeterType::Mpfm] {
            let members: Vec<&WellEvaluation> = wells.iter().filter(|w| w.meter == meter).collect();
            if members.is_empty() {
                continue;
            }
            let mapes: Vec<f64> = members.iter().map(|w| w.mape).collect();
            let rmses: Vec<f64> = members.iter().map(|w| w.rmse).collect();
            let pooled: Vec<f64> = members.iter().flat_map(|w| w.deviations.iter().copied()).collect();
            let curves: Vec<Vec<CurvePoint>> = members.iter().filter_map(|w| w.calibration.clone()).collect();
            let calibration = if curves.len() == members.len() {
                Some(calibration_bands(&curves)?)
            } else {
                None
            };
            let coverages: Vec<f64> = members.iter().filter_map(|w| w.coverage_95).collect();
            let coverage_95 = if coverages.len() == members.len() {
                Some(PercentileSummary::of(&coverages)?)
            } else {
                None
            };
            groups.push(GroupReport {
                meter,
                wells: members.len(),
                test_points: pooled.len(),
                mape: PercentileSummary::of(&mapes)?,
                rmse: PercentileSummary::of(&rmses)?,
                cumulative: cumulative_from_deviations(&pooled, thresholds),
                calibration,
                coverage_95,
            });
        }
        let report = EvaluationReport { groups, wells };
        report.check_invariants()?;
        Ok(report)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let fail = |what: String| Err(VfmError::Numerical(format!("report invariant violated: {what}")));
        for g in &self.groups {
            let name = g.meter.as_str();
            if !g.mape.is_monotone() || !g.rmse.is_monotone() {
                return fail(format!("{name} percentiles not monotone"));
            }
            if g.coverage_95.is_some_and(|c| !c.is_monotone()) {
                return fail(format!("{name} coverage percentiles not monotone"));
            }
            if g.cumulative.iter().any(|p| !(0.0..=1.0).contains(&p.y))
                || g.cumulative.windows(2).any(|w| w[1].y < w[0].y)
            {
                return fail(format!("{name} cumulative curve not monotone in [0, 1]"));
            }
            if let Some(bands) = &g.calibration {
                if bands.iter().any(|b| !(b.p25 <= b.p50 && b.p50 <= b.p75)) {
                    return fail(format!("{name} calibration band not ordered"));
                }
            }
        }
        for w in &self.wells {
            if let Some(c) = &w.calibration {
                if c.iter().any(|p| !(0.0..=1.0).contains(&p.y)) || c.windows(2).any(|p| p[1].y < p[0].y) {
                    return fail(format!("well {} calibration curve not monotone", w.well));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns `meter,threshold,fraction`.
    pub fn write_cumulative_csv(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["meter", "threshold", "fraction"])?;
        for g in &self.groups {
            for p in &g.cumulative {
                wtr.write_record([g.meter.as_str().to_string(), p.x.to_string(), p.y.to_string()])?;
            }
        }
        wtr.flush().map_err(|e| VfmError::io("<csv writer>", e))
    }

    /// Columns `meter,level,p25,p50,p75`.
    pub fn write_calibration_csv(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["meter", "level", "p25", "p50", "p75"])?;
        for g in &self.groups {
            for b in g.calibration.iter().flatten() {
                wtr.write_record([
                    g.meter.as_str().to_string(),
                    b.level.to_string(),
                    b.p25.to_string(),
                    b.p50.to_string(),
                    b.p75.to_string(),
                ])?;
            }
        }
        wtr.flush().map_err(|e| VfmError::io("<csv writer>", e))
    }

    /// Columns `well,meter,n_test,mape,rmse,coverage_95`.
    pub fn write_wells_csv(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["well", "meter", "n_test", "mape", "rmse", "coverage_95"])?;
        for w in &self.wells {
            wtr.write_record([
                w.well.clone(),
                w.meter.as_str().to_string(),
                w.n_test.to_string(),
                w.mape.to_string(),
                w.rmse.to_string(),
                w.coverage_95.map(|c| c.to_string()).unwrap_or_default(),
            ])?;
        }
        wtr.flush().map_err(|e| VfmError::io("<csv writer>", e))
    }
}
