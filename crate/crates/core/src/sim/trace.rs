use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{domain, Result};

/// A named series carried by a [`SimTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Theta,
    ThetaDot,
    Torque,
    Temperature,
    Strain,
    Stress,
}

impl Channel {
    /// Column header including the unit suffix.
    pub fn header(self) -> &'static str {
        match self {
            Channel::Theta => "theta_rad",
            Channel::ThetaDot => "theta_dot_rad_s",
            Channel::Torque => "torque_nm",
            Channel::Temperature => "temp_c",
            Channel::Strain => "strain",
            Channel::Stress => "stress_pa",
        }
    }
}

/// Uniformly sampled simulation output with `time[i] = i * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    dt: f64,
    time: Vec<f64>,
    columns: Vec<(Channel, Vec<f64>)>,
    /// Provenance: protocol name, geometry hash, material table id, ...
    pub metadata: BTreeMap<String, String>,
}

/// Formats with 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    format!("{v:.8e}")
}

/// Rounds to 9 significant digits so serialized output is stable.
pub fn round_sig9(v: f64) -> f64 {
    if v.is_finite() {
        format_sig9(v).parse().unwrap_or(v)
    } else {
        v
    }
}

impl SimTrace {
    pub fn new(dt: f64, columns: Vec<(Channel, Vec<f64>)>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(domain(format!("trace dt must be > 0, got {dt}")));
        }
        let len = columns.first().map(|c| c.1.len()).unwrap_or(0);
        if len < 2 {
            return Err(domain(format!("trace needs >= 2 samples, got {len}")));
        }
        for (ch, v) in &columns {
            if v.len() != len {
                return Err(domain(format!(
                    "column {} has {} samples, expected {len}",
                    ch.header(),
                    v.len()
                )));
            }
        }
        for (i, (ch, _)) in columns.iter().enumerate() {
            if columns[..i].iter().any(|(c, _)| c == ch) {
                return Err(domain(format!("duplicate column {}", ch.header())));
            }
        }
        let time = (0..len).map(|i| i as f64 * dt).collect();
        Ok(Self {
            dt,
            time,
            columns,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn channels(&self) -> impl Iterator<Item = Channel> + '_ {
        self.columns.iter().map(|(c, _)| *c)
    }

    pub fn column(&self, channel: Channel) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(c, _)| *c == channel)
            .map(|(_, v)| v.as_slice())
    }

    pub(crate) fn require(&self, channel: Channel) -> Result<&[f64]> {
        self.column(channel)
            .ok_or_else(|| domain(format!("trace has no {} column", channel.header())))
    }

    pub fn csv_header(&self) -> String {
        std::iter::once("time_s")
            .chain(self.columns.iter().map(|(c, _)| c.header()))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// CSV with `# key=value` metadata lines, a header row, then 9-significant-digit rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "{}", self.csv_header())?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            line.push_str(&format_sig9(self.time[i]));
            for (_, col) in &self.columns {
                line.push(',');
                line.push_str(&format_sig9(col[i]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    pub fn to_json(&self) -> Value {
        let round = |v: &[f64]| v.iter().map(|x| json!(round_sig9(*x))).collect::<Vec<_>>();
        let mut cols = Map::new();
        cols.insert("time_s".into(), Value::Array(round(&self.time)));
        for (c, v) in &self.columns {
            cols.insert(c.header().into(), Value::Array(round(v)));
        }
        json!({
            "dt_s": round_sig9(self.dt),
            "samples": self.len(),
            "metadata": self.metadata,
            "columns": cols,
        })
    }

    /// Time at which `channel` first reaches `level`, interpolated linearly
    /// between the bracketing samples.
    pub fn first_crossing(&self, channel: Channel, level: f64) -> Option<f64> {
        let v = self.column(channel)?;
        if v[0] == level {
            return Some(0.0);
        }
        let below = v[0] < level;
        v.windows(2).enumerate().find_map(|(i, w)| {
            let crossed = if below { w[1] >= level } else { w[1] <= level };
            crossed.then(|| {
                let frac = (level - w[0]) / (w[1] - w[0]);
                self.time[i] + frac * self.dt
            })
        })
    }
}
