use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mechanics::VimGeometry;
use crate::sim::rheometer::RELAXATION_STRAIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// x: omega (rad/s); y: G' and G'' (Pa).
    FrequencySweep,
    /// x: t (s); y: J (1/Pa).
    Creep,
    /// x: t (s); y: stress (Pa) under a held strain.
    StressRelaxation,
    /// x: t (s); y: link angle (rad) after release from rest.
    Perturbation,
}

impl DatasetKind {
    /// CSV columns: abscissa first, then the ordinate channels.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            DatasetKind::FrequencySweep => &["omega_rad_s", "g_prime_pa", "g_double_prime_pa"],
            DatasetKind::Creep => &["time_s", "compliance_per_pa"],
            DatasetKind::StressRelaxation => &["time_s", "stress_pa"],
            DatasetKind::Perturbation => &["time_s", "theta_rad"],
        }
    }

    pub fn channel_count(self) -> usize {
        self.columns().len() - 1
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::FrequencySweep => "frequency_sweep",
            DatasetKind::Creep => "creep",
            DatasetKind::StressRelaxation => "stress_relaxation",
            DatasetKind::Perturbation => "perturbation",
        })
    }
}

/// Measured or synthetic rheometer / perturbation data at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RheologyDataset {
    pub kind: DatasetKind,
    pub x: Vec<f64>,
    /// One series per channel, each as long as `x`.
    pub y: Vec<Vec<f64>>,
    pub temperature_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Held strain for stress-relaxation data.
    pub relaxation_strain: f64,
    /// Module geometry, required to predict perturbation traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<VimGeometry>,
}

impl RheologyDataset {
    pub fn new(kind: DatasetKind, x: Vec<f64>, y: Vec<Vec<f64>>, temperature_c: f64) -> Result<Self> {
        let ds = Self {
            kind,
            x,
            y,
            temperature_c,
            weights: None,
            relaxation_strain: RELAXATION_STRAIN,
            geometry: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.x.len() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(domain("weights must be finite, >= 0 and one per point"));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn with_relaxation_strain(mut self, strain: f64) -> Result<Self> {
        if !(strain.is_finite() && strain > 0.0) {
            return Err(domain(format!("relaxation strain must be > 0, got {strain}")));
        }
        self.relaxation_strain = strain;
        Ok(self)
    }

    pub fn with_geometry(mut self, geometry: VimGeometry) -> Self {
        self.geometry = Some(geometry);
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if self.y.len() != self.kind.channel_count() {
            return Err(domain(format!(
                "{} data needs {} ordinate channel(s), got {}",
                self.kind,
                self.kind.channel_count(),
                self.y.len()
            )));
        }
        for ch in &self.y {
            if ch.len() != self.x.len() {
                return Err(domain(format!(
                    "ordinate has {} points for {} abscissa values",
                    ch.len(),
                    self.x.len()
                )));
            }
        }
        let bad: Vec<u64> = (0..self.x.len())
            .filter(|&i| !self.x[i].is_finite() || self.y.iter().any(|c| !c[i].is_finite()))
            .map(|i| i as u64 + 1)
            .collect();
        if !bad.is_empty() {
            return Err(Error::NonFinite { lines: bad });
        }
        if let Some(i) = self.x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotone { line: i as u64 + 2 });
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        crate::sha256_hex(&serde_json::to_vec(self).expect("dataset serializes"))
    }
}

/// Reads a rheometer export with a header row.
///
/// Lines starting with `#` are skipped. Errors report 1-based line numbers
/// of the source: every line holding a non-finite or unparsable value, or
/// the first line whose abscissa does not increase. An optional `weight`
/// column supplies per-point weights.
pub fn load_rheology_csv<R: Read>(source: R, kind: DatasetKind, temperature_c: f64) -> Result<RheologyDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let index_of = |name: &str| headers.iter().position(|h| h == name);
    let cols = kind
        .columns()
        .iter()
        .map(|c| index_of(c).ok_or_else(|| Error::MissingColumn((*c).to_string())))
        .collect::<Result<Vec<_>>>()?;
    let weight_col = index_of("weight");

    let mut rows: Vec<(u64, Vec<f64>, Option<f64>)> = Vec::new();
    let mut bad_lines = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse = |i: usize| record.get(i).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite());
        let values: Option<Vec<f64>> = cols.iter().map(|&i| parse(i)).collect();
        let weight = weight_col.map(parse);
        match (values, weight) {
            (Some(v), None) => rows.push((line, v, None)),
            (Some(v), Some(Some(w))) => rows.push((line, v, Some(w))),
            _ => bad_lines.push(line),
        }
    }
    if rows.is_empty() && bad_lines.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !bad_lines.is_empty() {
        return Err(Error::NonFinite { lines: bad_lines });
    }
    if let Some(w) = rows.windows(2).find(|w| w[1].1[0] <= w[0].1[0]) {
        return Err(Error::NonMonotone { line: w[1].0 });
    }

    let x = rows.iter().map(|r| r.1[0]).collect();
    let y = (1..cols.len())
        .map(|c| rows.iter().map(|r| r.1[c]).collect())
        .collect();
    let ds = RheologyDataset::new(kind, x, y, temperature_c)?;
    if weight_col.is_some() {
        ds.with_weights(rows.iter().map(|r| r.2.unwrap_or(1.0)).collect())
    } else {
        Ok(ds)
    }
}
