//! Synthetic production well with a square-root choke law, reservoir depletion and
//! optional concept drift (choke erosion).
//!
//! Ground truth:
//!
//! ```text
//! z = C(t) * u^kappa * sqrt(p1 - p2) * sqrt(rho_ref / rho_mix(eta))
//! rho_mix = 1 / (eta_oil / rho_oil + eta_gas / rho_gas + eta_wat / rho_wat)
//! ```
//!
//! Measurement: `y = z + eps`, `eps ~ N(0, (sqrt(pi/2) * Er * z)^2)`, so `E|y - z| / z = Er`.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{MeterType, Record, WellDataset};
use crate::error::{Result, VfmError};
use crate::model::{FlowFeatures, SQRT_HALF_PI};
use crate::stats::rng;

const RHO_OIL: f64 = 800.0;
const RHO_GAS: f64 = 60.0;
const RHO_WATER: f64 = 1020.0;
const RHO_REF: f64 = RHO_OIL;
const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticWellConfig {
    pub meter: MeterType,
    pub records: usize,
    /// Hours between records; defaults to 12 h for MPFM and one week for test separators.
    pub cadence_hours: Option<f64>,
    pub start: DateTime<Utc>,
    /// Choke coefficient `C` at the start of the record.
    pub choke_coefficient: f64,
    /// Choke characteristic exponent `kappa`.
    pub choke_exponent: f64,
    /// Relative change of `C` per year (erosion). Changes the input-output map over time.
    pub coefficient_drift_per_year: f64,
    /// Initial reservoir pressure, bar.
    pub reservoir_pressure: f64,
    /// Reservoir pressure decline, bar per year.
    pub pressure_drift_per_year: f64,
    /// Downstream (manifold) pressure, bar.
    pub downstream_pressure: f64,
    /// Fraction of the reservoir-to-manifold pressure lost upstream of a fully open choke.
    pub drawdown: f64,
    pub pressure_jitter: f64,
    pub upstream_temperature: f64,
    /// Cooling across the choke, K per bar of pressure drop.
    pub joule_thomson: f64,
    pub temperature_jitter: f64,
    pub initial_choke: f64,
    /// Operator moves around the choke set-point (std).
    pub choke_jitter: f64,
    /// Set-point increase applied each time the reservoir pressure falls by `choke_step_pressure`.
    pub choke_step: f64,
    pub choke_step_pressure: f64,
    pub eta_oil_start: f64,
    pub eta_gas_start: f64,
    pub eta_oil_per_year: f64,
    pub eta_gas_per_year: f64,
    pub fraction_jitter: f64,
    /// Instrument MAPE as a fraction; defaults to the meter type's typical value.
    pub er: Option<f64>,
}

impl Default for SyntheticWellConfig {
    /// A stationary MPFM well.
    fn default() -> Self {
        SyntheticWellConfig {
            meter: MeterType::Mpfm,
            records: 1500,
            cadence_hours: None,
            start: Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap(),
            choke_coefficient: 12.0,
            choke_exponent: 1.5,
            coefficient_drift_per_year: 0.0,
            reservoir_pressure: 250.0,
            pressure_drift_per_year: 0.0,
            downstream_pressure: 40.0,
            drawdown: 0.4,
            pressure_jitter: 2.0,
            upstream_temperature: 360.0,
            joule_thomson: 0.08,
            temperature_jitter: 1.0,
            initial_choke: 0.4,
            choke_jitter: 0.08,
            choke_step: 0.06,
            choke_step_pressure: 12.0,
            eta_oil_start: 0.55,
            eta_gas_start: 0.15,
            eta_oil_per_year: 0.0,
            eta_gas_per_year: 0.0,
            fraction_jitter: 0.02,
            er: None,
        }
    }
}

impl SyntheticWellConfig {
    /// A depleting well whose choke coefficient also drifts.
    pub fn drifting() -> Self {
        SyntheticWellConfig {
            pressure_drift_per_year: 45.0,
            coefficient_drift_per_year: -0.25,
            eta_oil_per_year: -0.04,
            eta_gas_per_year: 0.03,
            ..SyntheticWellConfig::default()
        }
    }

    pub fn cadence(&self) -> f64 {
        self.cadence_hours.unwrap_or(match self.meter {
            MeterType::Mpfm => 12.0,
            MeterType::TestSeparator => 168.0,
        })
    }

    pub fn er(&self) -> f64 {
        self.er.unwrap_or_else(|| self.meter.default_er())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("choke_coefficient", self.choke_coefficient),
            ("choke_exponent", self.choke_exponent),
            ("reservoir_pressure", self.reservoir_pressure),
            ("downstream_pressure", self.downstream_pressure),
            ("cadence_hours", self.cadence()),
            ("upstream_temperature", self.upstream_temperature),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(VfmError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let er = self.er();
        if !(er >= 0.0 && er.is_finite()) {
            return Err(VfmError::Config(format!("instrument error must be non-negative, got {er}")));
        }
        let finite = [
            self.coefficient_drift_per_year,
            self.pressure_drift_per_year,
            self.eta_oil_per_year,
            self.eta_gas_per_year,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(VfmError::Config("drift rates must be finite".into()));
        }
        let non_negative = [
            self.pressure_jitter,
            self.temperature_jitter,
            self.choke_jitter,
            self.fraction_jitter,
            self.choke_step,
            self.joule_thomson,
        ];
        if non_negative.iter().any(|v| !(*v >= 0.0)) {
            return Err(VfmError::Config("jitter and step sizes must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.drawdown) {
            return Err(VfmError::Config("drawdown must lie in [0, 1)".into()));
        }
        if !(self.initial_choke > 0.0 && self.initial_choke <= 1.0) {
            return Err(VfmError::Config("initial choke must lie in (0, 1]".into()));
        }
        if !(self.choke_step_pressure > 0.0) {
            return Err(VfmError::Config("choke_step_pressure must be positive".into()));
        }
        if self.eta_oil_start < 0.0 || self.eta_gas_start < 0.0 || self.eta_oil_start + self.eta_gas_start > 1.0 {
            return Err(VfmError::Config("starting mass fractions must lie on the simplex".into()));
        }
        if self.records == 0 {
            return Err(VfmError::Config("record count must be positive".into()));
        }
        Ok(())
    }
}

/// Generated measurements together with the noiseless flow rate behind each record.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWell {
    pub dataset: WellDataset,
    pub truth: Vec<f64>,
}

/// Volumetric mixture-density factor `sqrt(rho_ref / rho_mix)`.
fn density_factor(eta_oil: f64, eta_gas: f64) -> f64 {
    let eta_wat = (1.0 - eta_oil - eta_gas).max(0.0);
    let specific_volume = eta_oil / RHO_OIL + eta_gas / RHO_GAS + eta_wat / RHO_WATER;
    (RHO_REF * specific_volume).sqrt()
}

/// Generates a synthetic well. If depletion drives the reservoir pressure below the
/// manifold pressure the series is truncated there (with a warning).
pub fn generate_synthetic_well(config: &SyntheticWellConfig, seed: u64) -> Result<SyntheticWell> {
    config.validate()?;
    let mut rng = rng(seed);
    let er = config.er();
    let cadence_ms = (config.cadence() * 3_600_000.0).round() as i64;
    let mut records = Vec::with_capacity(config.records);
    let mut truth = Vec::with_capacity(config.records);
    let mut normal = || rng.sample::<f64, _>(StandardNormal);

    for i in 0..config.records {
        let timestamp = config.start + Duration::milliseconds(cadence_ms * i as i64);
        let years = (timestamp - config.start).num_milliseconds() as f64 / 86_400_000.0 / DAYS_PER_YEAR;
        let p_res = config.reservoir_pressure - config.pressure_drift_per_year * years;
        if p_res <= config.downstream_pressure * 1.05 {
            log::warn!(
                "synthetic well truncated at record {i}: reservoir pressure {p_res:.1} bar reached the manifold pressure"
            );
            break;
        }
        let depletion = (config.reservoir_pressure - p_res).max(0.0);
        let set_point = (config.initial_choke + config.choke_step * (depletion / config.choke_step_pressure).floor()).min(1.0);
        let u = (set_point + config.choke_jitter * normal()).clamp(0.02, 1.0);

        let p2 = (config.downstream_pressure + config.pressure_jitter * normal()).max(1.0);
        let dp = ((p_res - p2) * (1.0 - config.drawdown * u) + config.pressure_jitter * normal()).max(0.5);
        let p1 = p2 + dp;
        let t1 = config.upstream_temperature + config.temperature_jitter * normal();
        let t2 = t1 - config.joule_thomson * dp + config.temperature_jitter * normal();

        let mut eta_oil = (config.eta_oil_start + config.eta_oil_per_year * years + config.fraction_jitter * normal()).max(0.01);
        let mut eta_gas = (config.eta_gas_start + config.eta_gas_per_year * years + config.fraction_jitter * normal()).max(0.01);
        let total = eta_oil + eta_gas;
        if total > 0.98 {
            eta_oil *= 0.98 / total;
            eta_gas *= 0.98 / total;
        }

        let coefficient = config.choke_coefficient * (1.0 + config.coefficient_drift_per_year * years).max(0.05);
        let z = coefficient * u.powf(config.choke_exponent) * dp.sqrt() * density_factor(eta_oil, eta_gas);
        let noise_std = SQRT_HALF_PI * er * z;
        // Redraw the (astronomically rare) non-positive measurement.
        let y = loop {
            let y = z + noise_std * normal();
            if y > 0.0 {
                break y;
            }
        };
        records.push(Record {
            timestamp,
            features: FlowFeatures::new(u, p1, p2, t1, t2, eta_oil, eta_gas)?,
            y,
            meter: config.meter,
        });
        truth.push(z);
    }
    if records.is_empty() {
        return Err(VfmError::Config("synthetic well configuration produced no records".into()));
    }
    Ok(SyntheticWell {
        dataset: WellDataset::new(records)?,
        truth,
    })
}
