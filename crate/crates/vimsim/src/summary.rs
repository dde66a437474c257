//! Schema of `summary.json`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use vimsim_core::fitting::{DatasetKind, FitResult};
use vimsim_core::mechanics::DATASHEET_TORSION_STIFFNESS;
use vimsim_core::sim::{round_sig9, PerturbationSummary};
use vimsim_core::{HeatingMode, MaterialTable, ModelFamily, SpringStiffnessSource, VimGeometry, ViscoelasticModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_digest: String,
    pub spring_stiffness: SpringReport,
    #[serde(flatten)]
    pub results: ProtocolResults,
}

/// Both torsion-spring values, the one in use, and why they differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpringReport {
    pub formula_nm_per_rad: f64,
    pub datasheet_nm_per_rad: f64,
    pub used_nm_per_rad: f64,
    pub source: String,
    pub link_total_nm_per_rad: f64,
    pub note: String,
}

pub const SPRING_NOTE: &str = "documented discrepancy: E*d^4/(64*D*n) evaluated on the listed wire \
and coil dimensions gives about 1.402 N*m/rad per spring, roughly 9x below the 12.5 N*m/rad \
datasheet value; the two are not reconciled. Set geometry.spring_stiffness to \
{\"stated_nm_per_rad\": 12.5} to simulate with the datasheet value.";

impl SpringReport {
    pub fn new(geom: &VimGeometry) -> vimsim_core::Result<Self> {
        Ok(Self {
            formula_nm_per_rad: geom.torsion_stiffness_formula()?,
            datasheet_nm_per_rad: DATASHEET_TORSION_STIFFNESS,
            used_nm_per_rad: geom.torsion_stiffness()?,
            source: match geom.spring_stiffness {
                SpringStiffnessSource::Formula => "formula".into(),
                SpringStiffnessSource::Stated(_) => "stated".into(),
            },
            link_total_nm_per_rad: geom.spring_stiffness_total()?,
            note: SPRING_NOTE.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", content = "results", rename_all = "kebab-case")]
pub enum ProtocolResults {
    Perturbation(PerturbationSummary),
    FreqSweep(FreqSweepResults),
    Creep(CreepResults),
    Relaxation(RelaxationResults),
    AmplitudeSweep(AmplitudeSweepResults),
    Thermal(ThermalResults),
    Fit(FitResults),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqSweepResults {
    pub temperature_c: f64,
    pub model: ViscoelasticModel,
    pub strain_amplitude: f64,
    pub points: usize,
    pub omega_min_rad_s: f64,
    pub omega_max_rad_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreepResults {
    pub temperature_c: f64,
    pub model: ViscoelasticModel,
    pub stress_pa: f64,
    pub dt_s: f64,
    pub peak_strain: f64,
    /// Closed-form compliance at the end of loading times the stress.
    pub expected_peak_strain: f64,
    pub final_strain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationResults {
    pub temperature_c: f64,
    pub model: ViscoelasticModel,
    pub strain: f64,
    pub dt_s: f64,
    pub peak_stress_pa: f64,
    pub final_stress_pa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSweepResults {
    pub temperature_c: f64,
    pub model: ViscoelasticModel,
    pub omega_rad_s: f64,
    pub points: usize,
    /// Largest strain whose storage modulus is within 5% of the smallest-strain value.
    pub linear_region_end_strain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalResults {
    pub mode: HeatingMode,
    pub tau_s: f64,
    pub gain_c_per_a2: f64,
    pub current_a: f64,
    pub start_c: f64,
    pub steady_state_c: f64,
    pub target_c: f64,
    /// Analytic time to reach the target; `null` when it is never reached.
    pub time_to_target_s: Option<f64>,
    /// Crossing time interpolated from the recorded trace.
    pub trace_crossing_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub temperature_c: f64,
    pub dataset: String,
    pub result: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResults {
    pub family: ModelFamily,
    pub kind: DatasetKind,
    pub fits: Vec<FitEntry>,
    /// Present when two or more temperatures were fitted.
    pub table: Option<MaterialTable>,
}

/// Every number rounded to 9 significant digits.
pub fn rounded(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n
            .as_f64()
            .and_then(|f| serde_json::Number::from_f64(round_sig9(f)))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(a) => Value::Array(a.into_iter().map(rounded).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        other => other,
    }
}

/// Numeric leaves of `results` keyed by dotted path, in key order.
pub fn scalar_columns(v: &Value) -> Vec<(String, Option<f64>)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, Option<f64>)>) {
        match v {
            Value::Number(n) => out.push((prefix.to_string(), n.as_f64())),
            Value::Null => out.push((prefix.to_string(), None)),
            Value::Object(m) => {
                for (k, v) in m {
                    let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&p, v, out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk("", v, &mut out);
    out
}
