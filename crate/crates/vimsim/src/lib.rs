//! Config-driven batch runner for module simulations, virtual rheometry,
//! thermal transients and parameter fits.
//!
//! Exit codes: 0 success, 2 validation error (nothing computed), 3 runtime error.

pub mod config;
pub mod experiment;
pub mod summary;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::Value;
use vimsim_core::sim::format_sig9;

use config::OutputFormat;
use experiment::{execute, prepare, Artifacts, Prepared};

pub const DEFAULT_OUT_DIR: &str = "vimsim-out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{} validation error(s):\n  {}", .0.len(), .0.join("\n  "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub overrides: Vec<String>,
    /// `--out` / `VIMSIM_OUT`; beats `output.dir` from the config.
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl RunOptions {
    fn all_overrides(&self) -> Vec<String> {
        let mut v = self.overrides.clone();
        if let Some(f) = self.format {
            let name = serde_json::to_value(f).expect("format serializes");
            v.push(format!("output.format={name}"));
        }
        v
    }
}

fn prepared(path: &Path, overrides: &[String]) -> Result<Prepared, Vec<String>> {
    prepare(config::load(path, overrides)?)
}

fn out_dir(p: &Prepared, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| p.config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Problem with writing into `dir`, found without touching the filesystem.
fn output_dir_violation(dir: &Path) -> Option<String> {
    let mut probe = Some(dir);
    while let Some(p) = probe {
        if let Ok(meta) = std::fs::metadata(p) {
            if !meta.is_dir() {
                return Some(format!("output dir: {} is not a directory", p.display()));
            }
            if meta.permissions().readonly() {
                return Some(format!("output dir: {} is not writable", p.display()));
            }
            return None;
        }
        probe = p.parent().filter(|q| !q.as_os_str().is_empty());
    }
    None
}

/// Every violation in the config, without side effects.
pub fn validate(path: &Path, opts: &RunOptions) -> Vec<String> {
    match prepared(path, &opts.all_overrides()) {
        Ok(p) => output_dir_violation(&out_dir(&p, opts)).into_iter().collect(),
        Err(v) => v,
    }
}

pub fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> anyhow::Result<()> {
    for (rel, contents) in &artifacts.files {
        let full = dir.join(rel);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&full, contents).map_err(|e| anyhow::anyhow!("writing {}: {e}", full.display()))?;
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Validation(vec![format!("output dir: cannot create {}: {e}", dir.display())]))
}

/// Validates, runs and writes one experiment; returns the output directory.
pub fn run(path: &Path, opts: &RunOptions) -> Result<(PathBuf, Artifacts), CliError> {
    let p = prepared(path, &opts.all_overrides()).map_err(CliError::Validation)?;
    let dir = out_dir(&p, opts);
    if let Some(v) = output_dir_violation(&dir) {
        return Err(CliError::Validation(vec![v]));
    }
    ensure_dir(&dir)?;
    let artifacts = execute(&p)?;
    write_artifacts(&dir, &artifacts)?;
    Ok((dir, artifacts))
}

/// Runs the experiment once per value of `axis`, each in `<out>/<axis>=<value>/`,
/// and writes `sweep.csv` with one row per value in input order.
pub fn sweep(path: &Path, opts: &RunOptions, axis: &str, values: &[String]) -> Result<PathBuf, CliError> {
    if values.is_empty() {
        return Err(CliError::Validation(vec!["sweep: at least one value is required".into()]));
    }
    let mut errors = Vec::new();
    let mut runs = Vec::new();
    for v in values {
        let mut ov = opts.all_overrides();
        ov.push(format!("{axis}={v}"));
        match prepared(path, &ov) {
            Ok(p) => runs.push((v.clone(), p)),
            Err(errs) => errors.extend(errs.into_iter().map(|e| format!("{axis}={v}: {e}"))),
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    let root = out_dir(&runs[0].1, opts);
    if let Some(v) = output_dir_violation(&root) {
        return Err(CliError::Validation(vec![v]));
    }
    ensure_dir(&root)?;

    let results: Vec<Artifacts> = runs
        .par_iter()
        .map(|(v, p)| {
            let a = execute(p).map_err(|e| e.context(format!("sweep value {axis}={v}")))?;
            write_artifacts(&root.join(run_dir_name(axis, v)), &a)?;
            Ok(a)
        })
        .collect::<anyhow::Result<_>>()?;

    let rows: Vec<Vec<(String, Option<f64>)>> = results
        .iter()
        .map(|a| {
            let v = serde_json::to_value(&a.summary.results).expect("summary serializes");
            summary::scalar_columns(v.get("results").unwrap_or(&Value::Null))
        })
        .collect();
    let mut header: Vec<String> = Vec::new();
    for row in &rows {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut csv = format!("# axis={axis}\n");
    for (v, a) in values.iter().zip(&results) {
        csv.push_str(&format!("# config_digest[{v}]={}\n", a.summary.config_digest));
    }
    csv.push_str(&std::iter::once(axis.to_string()).chain(header.iter().cloned()).collect::<Vec<_>>().join(","));
    csv.push('\n');
    for (v, row) in values.iter().zip(&rows) {
        let mut cells = vec![v.clone()];
        for k in &header {
            cells.push(
                row.iter()
                    .find(|(rk, _)| rk == k)
                    .and_then(|(_, x)| *x)
                    .map(format_sig9)
                    .unwrap_or_default(),
            );
        }
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    std::fs::write(root.join("sweep.csv"), csv).map_err(anyhow::Error::from)?;
    Ok(root)
}

fn run_dir_name(axis: &str, value: &str) -> String {
    format!("{axis}={value}")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._=-".contains(c) { c } else { '_' })
        .collect()
}
