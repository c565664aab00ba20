//! Well datasets, standardization, chronological splits and the synthetic well generator.

mod split;
mod standardize;
mod synthetic;

pub use split::{split_future, split_historical, validation_split, SplitKind, DEFAULT_WINDOW_DAYS};
pub use standardize::StandardizationStats;
pub use synthetic::{generate_synthetic_well, SyntheticWell, SyntheticWellConfig};

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VfmError};
use crate::model::FlowFeatures;

/// Instrument producing the flow-rate measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum MeterType {
    #[value(name = "test-separator")]
    TestSeparator,
    #[serde(rename = "MPFM")]
    #[value(name = "mpfm")]
    Mpfm,
}

impl MeterType {
    /// Typical instrument MAPE as a fraction.
    pub fn default_er(self) -> f64 {
        match self {
            MeterType::TestSeparator => 0.025,
            MeterType::Mpfm => 0.10,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MeterType::TestSeparator => "TestSeparator",
            MeterType::Mpfm => "MPFM",
        }
    }
}

impl std::fmt::Display for MeterType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub timestamp: DateTime<Utc>,
    pub features: FlowFeatures,
    /// Total volumetric flow rate, Sm3/h.
    pub y: f64,
    pub meter: MeterType,
}

/// Chronologically ordered measurements for one well.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WellDataset {
    records: Vec<Record>,
}

impl WellDataset {
    /// Validates ordering, target positivity and feature invariants.
    pub fn new(records: Vec<Record>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            r.features
                .validate()
                .map_err(|e| VfmError::Data(format!("record {i}: {e}")))?;
            if !(r.y > 0.0 && r.y.is_finite()) {
                return Err(VfmError::Data(format!("record {i}: flow rate must be positive, got {}", r.y)));
            }
            if i > 0 && r.timestamp <= records[i - 1].timestamp {
                return Err(VfmError::Data(format!("record {i}: timestamps must be strictly increasing")));
            }
        }
        Ok(WellDataset { records })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.y).collect()
    }

    pub fn features(&self) -> Vec<FlowFeatures> {
        self.records.iter().map(|r| r.features).collect()
    }

    /// Days between first and last record.
    pub fn span_days(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => (b.timestamp - a.timestamp).num_seconds() as f64 / 86_400.0,
            _ => 0.0,
        }
    }

    /// The meter type shared by the records (the first record's, if mixed).
    pub fn meter(&self) -> Option<MeterType> {
        self.records.first().map(|r| r.meter)
    }

    /// Contiguous sub-range, preserving order.
    pub fn slice(&self, range: std::ops::Range<usize>) -> WellDataset {
        WellDataset {
            records: self.records[range].to_vec(),
        }
    }

    pub(crate) fn from_sorted(records: Vec<Record>) -> Self {
        WellDataset { records }
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| VfmError::io(path.as_ref(), e))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected: Vec<&str> = CSV_HEADER.to_vec();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(VfmError::Data(format!(
                "unexpected dataset header {:?}, expected {}",
                headers.iter().collect::<Vec<_>>(),
                CSV_HEADER.join(",")
            )));
        }
        let mut records = Vec::new();
        for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            let timestamp = DateTime::parse_from_rfc3339(&row.timestamp)
                .map_err(|e| VfmError::Data(format!("row {i}: bad timestamp {:?}: {e}", row.timestamp)))?
                .with_timezone(&Utc);
            records.push(Record {
                timestamp,
                features: FlowFeatures {
                    u: row.u,
                    p1: row.p1,
                    p2: row.p2,
                    t1: row.t1,
                    t2: row.t2,
                    eta_oil: row.eta_oil,
                    eta_gas: row.eta_gas,
                },
                y: row.y,
                meter: row.meter,
            });
        }
        WellDataset::new(records)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref()).map_err(|e| VfmError::io(path.as_ref(), e))?;
        self.to_csv_writer(file)
    }

    pub fn to_csv_writer(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for r in &self.records {
            let f = &r.features;
            wtr.serialize(CsvRow {
                timestamp: r.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
                u: f.u,
                p1: f.p1,
                p2: f.p2,
                t1: f.t1,
                t2: f.t2,
                eta_oil: f.eta_oil,
                eta_gas: f.eta_gas,
                y: r.y,
                meter: r.meter,
            })?;
        }
        if self.records.is_empty() {
            wtr.write_record(CSV_HEADER)?;
        }
        wtr.flush().map_err(|e| VfmError::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Column order of dataset files.
pub const CSV_HEADER: [&str; 10] = ["timestamp", "u", "p1", "p2", "T1", "T2", "eta_oil", "eta_gas", "y", "meter"];

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    timestamp: String,
    u: f64,
    p1: f64,
    p2: f64,
    #[serde(rename = "T1")]
    t1: f64,
    #[serde(rename = "T2")]
    t2: f64,
    eta_oil: f64,
    eta_gas: f64,
    y: f64,
    meter: MeterType,
}
