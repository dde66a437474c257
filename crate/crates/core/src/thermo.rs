//! Temperature-dependent PCL parameters and the lumped Peltier heating model.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::material::{ModelFamily, ViscoelasticModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Linear in log10 of every parameter between bracketing entries.
    #[default]
    #[serde(alias = "LogLinear")]
    LogLinear,
    /// Parameters of the nearest entry; ties go to the colder entry.
    #[serde(alias = "NearestClamp")]
    NearestClamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub temp_c: f64,
    #[serde(flatten)]
    pub model: ViscoelasticModel,
}

/// Viscoelastic parameters tabulated against temperature.
///
/// Entries are sorted by strictly increasing temperature and share one model
/// family. Lookups outside the tabulated range clamp to the end entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct MaterialTable {
    #[serde(default)]
    interpolation: Interpolation,
    entries: Vec<TableEntry>,
}

#[derive(Deserialize)]
struct RawTable {
    #[serde(default)]
    interpolation: Interpolation,
    entries: Vec<TableEntry>,
}

impl TryFrom<RawTable> for MaterialTable {
    type Error = crate::Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        MaterialTable::new(raw.entries, raw.interpolation)
    }
}

impl MaterialTable {
    pub fn new(entries: Vec<TableEntry>, interpolation: Interpolation) -> Result<Self> {
        if entries.len() < 2 {
            return Err(config(format!(
                "material table needs >= 2 entries, got {}",
                entries.len()
            )));
        }
        let family = entries[0].model.family;
        for (i, e) in entries.iter().enumerate() {
            if !e.temp_c.is_finite() {
                return Err(config(format!("entry {i}: temperature is not finite")));
            }
            e.model
                .validate()
                .map_err(|err| config(format!("entry {i} ({} degC): {err}", e.temp_c)))?;
            if e.model.family != family {
                return Err(config(format!(
                    "entry {i}: family {} differs from {family}",
                    e.model.family
                )));
            }
        }
        for (i, w) in entries.windows(2).enumerate() {
            if w[1].temp_c <= w[0].temp_c {
                return Err(config(format!(
                    "temperatures must strictly increase: entry {} ({} degC) follows {} degC",
                    i + 1,
                    w[1].temp_c,
                    w[0].temp_c
                )));
            }
        }
        Ok(Self {
            interpolation,
            entries,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// SYNTHETIC placeholder parameters for PCL below, at and above its melt.
    ///
    /// The moduli are order-of-magnitude values (two decades of E1 between
    /// neighbouring entries) chosen to reproduce the qualitative softening
    /// and the rising damping ratio of the module with temperature. They are
    /// not measured values and are meant to be replaced by fitted tables.
    pub fn pcl_default() -> Self {
        let kv = |temp_c, e1, eta| TableEntry {
            temp_c,
            model: ViscoelasticModel {
                family: ModelFamily::KelvinVoigt,
                e1,
                eta,
                e2: None,
            },
        };
        Self::new(
            vec![kv(30.0, 1.0e6, 30.0), kv(60.0, 1.0e4, 10.0), kv(100.0, 1.0e2, 8.0)],
            Interpolation::LogLinear,
        )
        .expect("default table is valid")
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn family(&self) -> ModelFamily {
        self.entries[0].model.family
    }

    /// Model parameters at `temp_c`, clamped to the tabulated range.
    pub fn params_at_temperature(&self, temp_c: f64) -> ViscoelasticModel {
        let first = &self.entries[0];
        let last = &self.entries[self.entries.len() - 1];
        if temp_c.is_nan() || temp_c <= first.temp_c {
            return first.model;
        }
        if temp_c >= last.temp_c {
            return last.model;
        }
        // first index whose temperature exceeds temp_c; guaranteed in 1..len
        let hi = self.entries.partition_point(|e| e.temp_c <= temp_c);
        let (a, b) = (&self.entries[hi - 1], &self.entries[hi]);
        if temp_c == a.temp_c {
            return a.model;
        }
        let frac = (temp_c - a.temp_c) / (b.temp_c - a.temp_c);
        match self.interpolation {
            Interpolation::NearestClamp => {
                if frac <= 0.5 {
                    a.model
                } else {
                    b.model
                }
            }
            Interpolation::LogLinear => {
                let lerp = |x: f64, y: f64| 10f64.powf(x.log10() * (1.0 - frac) + y.log10() * frac);
                ViscoelasticModel {
                    family: a.model.family,
                    e1: lerp(a.model.e1, b.model.e1),
                    eta: lerp(a.model.eta, b.model.eta),
                    e2: match (a.model.e2, b.model.e2) {
                        (Some(x), Some(y)) => Some(lerp(x, y)),
                        _ => None,
                    },
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatingMode {
    #[default]
    Shear,
    Compression,
}

/// Anchor points for calibrating the first-order heating model.
///
/// Defaults: 25 degC ambient, 120 degC steady state at 1.5 A, and 100 degC
/// reached after 70 s (shear) or 140 s (compression).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThermalCalibration {
    pub ambient_c: f64,
    pub steady_c: f64,
    pub reference_current_a: f64,
    pub target_c: f64,
    pub shear_elapsed_s: f64,
    pub compression_elapsed_s: f64,
}

impl Default for ThermalCalibration {
    fn default() -> Self {
        Self {
            ambient_c: 25.0,
            steady_c: 120.0,
            reference_current_a: 1.5,
            target_c: 100.0,
            shear_elapsed_s: 70.0,
            compression_elapsed_s: 140.0,
        }
    }
}

/// First-order lumped heating: `T_ss(I) = ambient + gain * I^2`, time constant `tau`.
///
/// Cooling (lower drive current) relaxes with the same time constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalModel {
    pub ambient_c: f64,
    /// degC per A^2
    pub gain_c_per_a2: f64,
    pub tau_s: f64,
    pub mode: HeatingMode,
}

/// Time constant that carries `ambient` to `target` in `elapsed` seconds
/// when relaxing towards `steady`.
pub fn calibrate_tau(ambient_c: f64, target_c: f64, steady_c: f64, elapsed_s: f64) -> Result<f64> {
    if !(ambient_c < target_c && target_c < steady_c) {
        return Err(domain(format!(
            "need ambient < target < steady, got {ambient_c} / {target_c} / {steady_c} degC"
        )));
    }
    if !(elapsed_s.is_finite() && elapsed_s > 0.0) {
        return Err(domain(format!("elapsed time must be > 0, got {elapsed_s}")));
    }
    Ok(elapsed_s / ((steady_c - ambient_c) / (steady_c - target_c)).ln())
}

impl ThermalModel {
    pub fn new(ambient_c: f64, gain_c_per_a2: f64, tau_s: f64, mode: HeatingMode) -> Result<Self> {
        if !(tau_s.is_finite() && tau_s > 0.0) {
            return Err(config(format!("thermal tau must be > 0, got {tau_s}")));
        }
        if !(gain_c_per_a2.is_finite() && gain_c_per_a2 > 0.0) {
            return Err(config(format!(
                "heating gain must be > 0, got {gain_c_per_a2} degC/A^2"
            )));
        }
        if !ambient_c.is_finite() {
            return Err(config("ambient temperature must be finite"));
        }
        Ok(Self {
            ambient_c,
            gain_c_per_a2,
            tau_s,
            mode,
        })
    }

    /// Calibrates gain through the reference-current anchor and tau through
    /// the elapsed time belonging to `mode`.
    pub fn calibrated(mode: HeatingMode, cal: &ThermalCalibration) -> Result<Self> {
        if !(cal.reference_current_a.is_finite() && cal.reference_current_a > 0.0) {
            return Err(config("reference current must be > 0"));
        }
        let elapsed = match mode {
            HeatingMode::Shear => cal.shear_elapsed_s,
            HeatingMode::Compression => cal.compression_elapsed_s,
        };
        let tau = calibrate_tau(cal.ambient_c, cal.target_c, cal.steady_c, elapsed)?;
        let gain = (cal.steady_c - cal.ambient_c) / cal.reference_current_a.powi(2);
        Self::new(cal.ambient_c, gain, tau, mode)
    }

    pub fn steady_state(&self, current_a: f64) -> f64 {
        self.ambient_c + self.gain_c_per_a2 * current_a * current_a
    }

    /// Exact exponential update over `dt` seconds at constant drive current.
    pub fn step(&self, temp_c: f64, current_a: f64, dt: f64) -> Result<f64> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(domain(format!("thermal step must be > 0, got {dt}")));
        }
        let steady = self.steady_state(current_a);
        Ok(steady + (temp_c - steady) * (-dt / self.tau_s).exp())
    }

    /// Closed-form time to go from `start_c` to `target_c` at `current_a`.
    pub fn time_to_reach(&self, start_c: f64, target_c: f64, current_a: f64) -> Result<f64> {
        let steady = self.steady_state(current_a);
        let (gap0, gap1) = (steady - start_c, steady - target_c);
        if gap0 == 0.0 || gap1 == 0.0 || gap0.signum() != gap1.signum() || gap1.abs() > gap0.abs() {
            return Err(domain(format!(
                "{target_c} degC is not reachable from {start_c} degC towards {steady} degC"
            )));
        }
        Ok(self.tau_s * (gap0 / gap1).ln())
    }
}
