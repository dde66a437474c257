//! Experiment configuration: JSON with unit-suffixed keys, defaults filled
//! in before dotted overrides are applied, converted to SI once.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use vimsim_core::fitting::DatasetKind;
use vimsim_core::sim::LinearityLimit;
use vimsim_core::{
    HeatingMode, MaterialTable, ModelFamily, SpringStiffnessSource, ThermalCalibration, VimGeometry,
};

pub const PROTOCOLS: [&str; 7] = [
    "perturbation",
    "freq-sweep",
    "creep",
    "relaxation",
    "amplitude-sweep",
    "thermal",
    "fit",
];

const SECTIONS: [&str; 5] = ["geometry", "material", "thermal", "protocol", "output"];
const REQUIRED: [&str; 2] = ["geometry", "protocol"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySpec {
    pub youngs_modulus_gpa: f64,
    pub wire_diameter_mm: f64,
    pub coil_diameter_mm: f64,
    pub n_coils: f64,
    pub n_springs: u32,
    pub spring_radius_mm: f64,
    pub link_inertia_kg_mm2: f64,
    pub pcl_contact_area_mm2: f64,
    pub pcl_radius_mm: f64,
    pub pcl_gap_mm: f64,
    pub pretension_rad: f64,
    pub max_deflection_rad: f64,
    /// `"formula"` or `{"stated_nm_per_rad": k}`.
    pub spring_stiffness: SpringStiffnessSource,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            youngs_modulus_gpa: 210.0,
            wire_diameter_mm: 2.413,
            coil_diameter_mm: 24.4094,
            n_coils: 3.25,
            n_springs: 4,
            spring_radius_mm: 57.0,
            link_inertia_kg_mm2: 415.6,
            pcl_contact_area_mm2: 1579.2,
            pcl_radius_mm: 57.0,
            pcl_gap_mm: 1.0,
            pretension_rad: 0.0,
            max_deflection_rad: 0.104,
            spring_stiffness: SpringStiffnessSource::Formula,
        }
    }
}

impl GeometrySpec {
    pub fn to_si(&self) -> VimGeometry {
        VimGeometry {
            youngs_modulus: self.youngs_modulus_gpa * 1e9,
            wire_diameter: self.wire_diameter_mm / 1e3,
            coil_diameter: self.coil_diameter_mm / 1e3,
            n_coils: self.n_coils,
            n_springs: self.n_springs,
            spring_radius: self.spring_radius_mm / 1e3,
            link_inertia: self.link_inertia_kg_mm2 / 1e6,
            pcl_contact_area: self.pcl_contact_area_mm2 / 1e6,
            pcl_radius: self.pcl_radius_mm / 1e3,
            pcl_gap: self.pcl_gap_mm / 1e3,
            pretension: self.pretension_rad,
            max_deflection: self.max_deflection_rad,
            spring_stiffness: self.spring_stiffness,
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (key, v) in [
            ("youngs_modulus_gpa", self.youngs_modulus_gpa),
            ("wire_diameter_mm", self.wire_diameter_mm),
            ("coil_diameter_mm", self.coil_diameter_mm),
            ("spring_radius_mm", self.spring_radius_mm),
            ("link_inertia_kg_mm2", self.link_inertia_kg_mm2),
            ("pcl_contact_area_mm2", self.pcl_contact_area_mm2),
            ("pcl_radius_mm", self.pcl_radius_mm),
            ("pcl_gap_mm", self.pcl_gap_mm),
            ("max_deflection_rad", self.max_deflection_rad),
        ] {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("geometry.{key}: must be finite and > 0, got {v}"));
            }
        }
        if !(self.n_coils.is_finite() && self.n_coils >= 1.0) {
            out.push(format!("geometry.n_coils: must be >= 1, got {}", self.n_coils));
        }
        if self.n_springs == 0 {
            out.push("geometry.n_springs: must be >= 1".into());
        }
        if !self.pretension_rad.is_finite() {
            out.push("geometry.pretension_rad: must be finite".into());
        }
        if let SpringStiffnessSource::Stated(k) = self.spring_stiffness {
            if !(k.is_finite() && k > 0.0) {
                out.push(format!(
                    "geometry.spring_stiffness.stated_nm_per_rad: must be > 0, got {k}"
                ));
            }
        }
        out
    }
}

/// Where the temperature-dependent PCL parameters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialSpec {
    /// Built-in SYNTHETIC placeholder table.
    #[default]
    Default,
    /// JSON table file, relative to the config file.
    File { path: PathBuf },
    Inline { table: MaterialTable },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalSpec {
    pub mode: HeatingMode,
    pub ambient_c: f64,
    pub steady_c: f64,
    pub reference_current_a: f64,
    pub target_c: f64,
    pub shear_elapsed_s: f64,
    pub compression_elapsed_s: f64,
}

impl Default for ThermalSpec {
    fn default() -> Self {
        let c = ThermalCalibration::default();
        Self {
            mode: HeatingMode::Shear,
            ambient_c: c.ambient_c,
            steady_c: c.steady_c,
            reference_current_a: c.reference_current_a,
            target_c: c.target_c,
            shear_elapsed_s: c.shear_elapsed_s,
            compression_elapsed_s: c.compression_elapsed_s,
        }
    }
}

impl ThermalSpec {
    pub fn calibration(&self) -> ThermalCalibration {
        ThermalCalibration {
            ambient_c: self.ambient_c,
            steady_c: self.steady_c,
            reference_current_a: self.reference_current_a,
            target_c: self.target_c,
            shear_elapsed_s: self.shear_elapsed_s,
            compression_elapsed_s: self.compression_elapsed_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationParams {
    pub temperature_c: f64,
    pub theta0_rad: f64,
    pub dt_s: f64,
    pub duration_s: f64,
}

impl Default for PerturbationParams {
    fn default() -> Self {
        Self {
            temperature_c: 30.0,
            theta0_rad: 0.1,
            dt_s: 2e-5,
            duration_s: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreqSweepParams {
    pub temperature_c: f64,
    pub omega_min_rad_s: f64,
    pub omega_max_rad_s: f64,
    pub points_per_decade: usize,
    pub strain_amplitude: f64,
}

impl Default for FreqSweepParams {
    fn default() -> Self {
        use vimsim_core::sim::rheometer::*;
        Self {
            temperature_c: 30.0,
            omega_min_rad_s: SWEEP_OMEGA_MIN,
            omega_max_rad_s: SWEEP_OMEGA_MAX,
            points_per_decade: SWEEP_POINTS_PER_DECADE,
            strain_amplitude: SWEEP_STRAIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreepParams {
    pub temperature_c: f64,
    pub stress_pa: f64,
    pub load_s: f64,
    pub recovery_s: f64,
    /// `null` picks the stability limit of the material at `temperature_c`.
    pub dt_s: Option<f64>,
}

impl Default for CreepParams {
    fn default() -> Self {
        use vimsim_core::sim::rheometer::*;
        Self {
            temperature_c: 100.0,
            stress_pa: CREEP_STRESS_PA,
            load_s: CREEP_LOAD_S,
            recovery_s: CREEP_RECOVERY_S,
            dt_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxationParams {
    pub temperature_c: f64,
    pub strain: f64,
    pub ramp_s: f64,
    pub hold_s: f64,
    /// `null` picks the stability limit of the material at `temperature_c`.
    pub dt_s: Option<f64>,
}

impl Default for RelaxationParams {
    fn default() -> Self {
        use vimsim_core::sim::rheometer::*;
        Self {
            temperature_c: 100.0,
            strain: RELAXATION_STRAIN,
            ramp_s: RELAXATION_RAMP_S,
            hold_s: RELAXATION_HOLD_S,
            dt_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplitudeSweepParams {
    pub temperature_c: f64,
    pub strain_min: f64,
    pub strain_max: f64,
    pub points: usize,
    pub omega_rad_s: f64,
    pub linearity_limit: Option<LinearityLimit>,
}

impl Default for AmplitudeSweepParams {
    fn default() -> Self {
        Self {
            temperature_c: 30.0,
            strain_min: 1e-5,
            strain_max: 1e-1,
            points: 21,
            omega_rad_s: vimsim_core::sim::rheometer::AMPLITUDE_SWEEP_OMEGA,
            linearity_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalParams {
    pub current_a: f64,
    /// `null` starts at ambient.
    pub start_c: Option<f64>,
    pub target_c: f64,
    pub dt_s: f64,
    pub duration_s: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            current_a: 1.5,
            start_c: None,
            target_c: 100.0,
            dt_s: 0.1,
            duration_s: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRef {
    pub path: PathBuf,
    pub temperature_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation_strain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitParams {
    pub family: ModelFamily,
    pub kind: DatasetKind,
    pub datasets: Vec<DatasetRef>,
}

impl Default for FitParams {
    fn default() -> Self {
        Self {
            family: ModelFamily::KelvinVoigt,
            kind: DatasetKind::FrequencySweep,
            datasets: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ProtocolSpec {
    Perturbation(PerturbationParams),
    FreqSweep(FreqSweepParams),
    Creep(CreepParams),
    Relaxation(RelaxationParams),
    AmplitudeSweep(AmplitudeSweepParams),
    Thermal(ThermalParams),
    Fit(FitParams),
}

impl ProtocolSpec {
    pub fn default_for(name: &str) -> Option<Self> {
        Some(match name {
            "perturbation" => Self::Perturbation(Default::default()),
            "freq-sweep" => Self::FreqSweep(Default::default()),
            "creep" => Self::Creep(Default::default()),
            "relaxation" => Self::Relaxation(Default::default()),
            "amplitude-sweep" => Self::AmplitudeSweep(Default::default()),
            "thermal" => Self::Thermal(Default::default()),
            "fit" => Self::Fit(Default::default()),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Perturbation(_) => "perturbation",
            Self::FreqSweep(_) => "freq-sweep",
            Self::Creep(_) => "creep",
            Self::Relaxation(_) => "relaxation",
            Self::AmplitudeSweep(_) => "amplitude-sweep",
            Self::Thermal(_) => "thermal",
            Self::Fit(_) => "fit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        self != Self::Json
    }

    pub fn json(self) -> bool {
        self != Self::Csv
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Used when neither `--out` nor `VIMSIM_OUT` is given.
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
    /// Traces longer than this are written with a uniform stride.
    pub max_rows: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            format: OutputFormat::Both,
            max_rows: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: GeometrySpec,
    pub material: MaterialSpec,
    pub thermal: ThermalSpec,
    pub protocol: ProtocolSpec,
    pub output: OutputSpec,
    /// Fully materialised JSON after defaults and overrides.
    pub resolved: Value,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// SHA-256 of the resolved config, excluding the output directory so
    /// the same experiment written elsewhere keeps its digest.
    pub fn digest(&self) -> String {
        let mut v = self.resolved.clone();
        if let Some(out) = v.get_mut("output").and_then(Value::as_object_mut) {
            out.remove("dir");
        }
        vimsim_core::sha256_hex(v.to_string().as_bytes())
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Reads `path` and applies `overrides`; every problem found is returned.
pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![format!("{}: cannot read config: {e}", path.display())])?;
    let raw: Value = serde_json::from_str(&text)
        .map_err(|e| vec![format!("{}: invalid JSON: {e}", path.display())])?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    from_value(raw, overrides, base_dir)
}

pub fn from_value(raw: Value, overrides: &[String], base_dir: PathBuf) -> Result<ExperimentConfig, Vec<String>> {
    let Value::Object(mut root) = raw else {
        return Err(vec!["config: top level must be a JSON object".into()]);
    };
    let mut errors = Vec::new();
    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            errors.push(format!(
                "{key}: unknown section (expected one of {})",
                SECTIONS.join(", ")
            ));
        }
    }
    for key in REQUIRED {
        if !root.contains_key(key) {
            errors.push(format!("{key}: required section is missing"));
        }
    }
    materialize(&mut root, &mut errors);

    let mut resolved = Value::Object(root);
    for ov in overrides {
        if let Err(e) = apply_override(&mut resolved, ov) {
            errors.push(e);
        }
    }
    if let Value::Object(root) = &mut resolved {
        // a protocol.name override brings in the new protocol's defaults
        materialize(root, &mut Vec::new());
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let geometry = section::<GeometrySpec>(&resolved, "geometry", &mut errors);
    let material = section::<MaterialSpec>(&resolved, "material", &mut errors);
    let thermal = section::<ThermalSpec>(&resolved, "thermal", &mut errors);
    let protocol = section::<ProtocolSpec>(&resolved, "protocol", &mut errors);
    let output = section::<OutputSpec>(&resolved, "output", &mut errors);
    match (geometry, material, thermal, protocol, output) {
        (Some(geometry), Some(material), Some(thermal), Some(protocol), Some(output)) if errors.is_empty() => {
            let mut errors = geometry.violations();
            errors.extend(protocol_shape_violations(&protocol));
            if errors.is_empty() {
                Ok(ExperimentConfig {
                    geometry,
                    material,
                    thermal,
                    protocol,
                    output,
                    resolved,
                    base_dir,
                })
            } else {
                Err(errors)
            }
        }
        _ => Err(errors),
    }
}

fn materialize(root: &mut Map<String, Value>, errors: &mut Vec<String>) {
    let defaults: [(&str, Value); 4] = [
        ("geometry", to_value(GeometrySpec::default())),
        ("material", to_value(MaterialSpec::default())),
        ("thermal", to_value(ThermalSpec::default())),
        ("output", to_value(OutputSpec::default())),
    ];
    for (key, default) in defaults {
        if key == "material" || key == "output" || key == "thermal" || root.contains_key(key) {
            let user = root.remove(key).unwrap_or(Value::Object(Map::new()));
            root.insert(key.to_string(), merge(default, user));
        }
    }
    let Some(protocol) = root.get_mut("protocol") else {
        return;
    };
    let name = match protocol.get("name") {
        Some(Value::String(s)) => s.clone(),
        Some(other) => {
            errors.push(format!("protocol.name: expected a string, got {other}"));
            return;
        }
        None => {
            errors.push(format!(
                "protocol.name: missing (expected one of {})",
                PROTOCOLS.join(", ")
            ));
            return;
        }
    };
    match ProtocolSpec::default_for(&name) {
        Some(default) => *protocol = merge(to_value(default), protocol.take()),
        None => errors.push(format!(
            "protocol.name: unknown protocol `{name}` (expected one of {})",
            PROTOCOLS.join(", ")
        )),
    }
}

fn to_value<T: Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("config types serialize")
}

/// `user` laid over `default`, recursing into objects.
fn merge(default: Value, user: Value) -> Value {
    match (default, user) {
        (Value::Object(mut d), Value::Object(u)) => {
            for (k, v) in u {
                let merged = match d.remove(&k) {
                    Some(dv) => merge(dv, v),
                    None => v,
                };
                d.insert(k, merged);
            }
            Value::Object(d)
        }
        (_, u) => u,
    }
}

/// `a.b.c=value`; the path must already exist. The value is read as JSON
/// when it parses, otherwise as a string.
pub fn apply_override(root: &mut Value, ov: &str) -> Result<(), String> {
    let (path, raw) = ov
        .split_once('=')
        .ok_or_else(|| format!("override `{ov}`: expected key=value"))?;
    let path = path.trim();
    let mut node = root;
    for part in path.split('.') {
        node = match node {
            Value::Object(m) => m.get_mut(part),
            Value::Array(a) => part.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| format!("override `{path}`: no such key in the config"))?;
    }
    *node = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(())
}

fn section<T: DeserializeOwned>(root: &Value, key: &str, errors: &mut Vec<String>) -> Option<T> {
    let v = root.get(key)?;
    serde_json::from_value(v.clone())
        .map_err(|e| errors.push(format!("{key}: {e}")))
        .ok()
}

fn protocol_shape_violations(p: &ProtocolSpec) -> Vec<String> {
    let mut out = Vec::new();
    let positive = |out: &mut Vec<String>, key: &str, v: f64| {
        if !(v.is_finite() && v > 0.0) {
            out.push(format!("protocol.{key}: must be finite and > 0, got {v}"));
        }
    };
    match p {
        ProtocolSpec::Perturbation(q) => {
            positive(&mut out, "dt_s", q.dt_s);
            positive(&mut out, "duration_s", q.duration_s);
        }
        ProtocolSpec::FreqSweep(q) => {
            positive(&mut out, "omega_min_rad_s", q.omega_min_rad_s);
            positive(&mut out, "omega_max_rad_s", q.omega_max_rad_s);
            positive(&mut out, "strain_amplitude", q.strain_amplitude);
            positive(&mut out, "points_per_decade", q.points_per_decade as f64);
        }
        ProtocolSpec::Creep(q) => {
            positive(&mut out, "stress_pa", q.stress_pa);
            positive(&mut out, "load_s", q.load_s);
            positive(&mut out, "recovery_s", q.recovery_s);
            if let Some(dt) = q.dt_s {
                positive(&mut out, "dt_s", dt);
            }
        }
        ProtocolSpec::Relaxation(q) => {
            positive(&mut out, "strain", q.strain);
            positive(&mut out, "hold_s", q.hold_s);
            if !(q.ramp_s.is_finite() && q.ramp_s >= 0.0) {
                out.push(format!("protocol.ramp_s: must be >= 0, got {}", q.ramp_s));
            }
            if let Some(dt) = q.dt_s {
                positive(&mut out, "dt_s", dt);
            }
        }
        ProtocolSpec::AmplitudeSweep(q) => {
            positive(&mut out, "strain_min", q.strain_min);
            positive(&mut out, "omega_rad_s", q.omega_rad_s);
            positive(&mut out, "points", q.points as f64);
            if !(q.strain_max > q.strain_min) {
                out.push(format!(
                    "protocol.strain_max: must exceed strain_min {}, got {}",
                    q.strain_min, q.strain_max
                ));
            }
        }
        ProtocolSpec::Thermal(q) => {
            positive(&mut out, "dt_s", q.dt_s);
            positive(&mut out, "duration_s", q.duration_s);
            if !(q.current_a.is_finite() && q.current_a >= 0.0) {
                out.push(format!("protocol.current_a: must be >= 0, got {}", q.current_a));
            }
        }
        ProtocolSpec::Fit(q) => {
            if q.datasets.is_empty() {
                out.push("protocol.datasets: at least one dataset is required".into());
            }
        }
    }
    if let ProtocolSpec::FreqSweep(q) = p {
        if q.omega_max_rad_s < q.omega_min_rad_s {
            out.push(format!(
                "protocol.omega_max_rad_s: must be >= omega_min_rad_s {}, got {}",
                q.omega_min_rad_s, q.omega_max_rad_s
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn cfg(v: Value, ov: &[&str]) -> Result<ExperimentConfig, Vec<String>> {
        let ov: Vec<String> = ov.iter().map(|s| s.to_string()).collect();
        from_value(v, &ov, PathBuf::new())
    }

    #[test]
    fn defaults_fill_every_section() {
        let c = cfg(json!({"geometry": {}, "protocol": {"name": "perturbation"}}), &[]).unwrap();
        assert_eq!(c.geometry, GeometrySpec::default());
        assert_eq!(c.protocol, ProtocolSpec::Perturbation(PerturbationParams::default()));
        assert_eq!(c.output.format, OutputFormat::Both);
    }

    #[test]
    fn si_conversion_matches_nominal() {
        let g = GeometrySpec::default().to_si();
        let n = VimGeometry::nominal();
        assert!((g.wire_diameter - n.wire_diameter).abs() < 1e-18);
        assert!((g.link_inertia - n.link_inertia).abs() < 1e-18);
        assert_eq!(g.youngs_modulus, n.youngs_modulus);
    }

    #[test]
    fn missing_geometry_names_the_path() {
        let e = cfg(json!({"protocol": {"name": "thermal"}}), &[]).unwrap_err();
        assert!(e.iter().any(|m| m.starts_with("geometry:")), "{e:?}");
    }

    #[test]
    fn overrides_need_existing_keys() {
        let base = json!({"geometry": {}, "protocol": {"name": "perturbation"}});
        let c = cfg(base.clone(), &["protocol.temperature_c=100"]).unwrap();
        match c.protocol {
            ProtocolSpec::Perturbation(p) => assert_eq!(p.temperature_c, 100.0),
            other => panic!("{other:?}"),
        }
        let e = cfg(base, &["protocol.temprature_c=100", "geometry.nope=1"]).unwrap_err();
        assert_eq!(e.len(), 2);
    }

    #[test]
    fn unknown_protocol_and_field_are_reported_together() {
        let e = cfg(
            json!({"geometry": {"wire_diameter": 2.0}, "protocol": {"name": "spin"}}),
            &[],
        )
        .unwrap_err();
        assert!(e.iter().any(|m| m.contains("unknown protocol `spin`")), "{e:?}");
        let e = cfg(json!({"geometry": {"wire_diameter": 2.0}, "protocol": {"name": "thermal"}}), &[]).unwrap_err();
        assert!(e.iter().any(|m| m.contains("wire_diameter")), "{e:?}");
    }

    #[test]
    fn protocol_switch_by_override() {
        let c = cfg(
            json!({"geometry": {}, "protocol": {"name": "thermal"}}),
            &["protocol.name=freq-sweep"],
        );
        // thermal keys do not belong to a frequency sweep
        assert!(c.is_err());
    }

    #[test]
    fn digest_ignores_output_dir_only() {
        let a = cfg(json!({"geometry": {}, "protocol": {"name": "thermal"}, "output": {"dir": "a"}}), &[]).unwrap();
        let b = cfg(json!({"geometry": {}, "protocol": {"name": "thermal"}, "output": {"dir": "b"}}), &[]).unwrap();
        let c = cfg(json!({"geometry": {}, "protocol": {"name": "thermal", "current_a": 1.0}}), &[]).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }
}
