//! Physics validation and protocol execution.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Context;
use vimsim_core::fitting::{
    fit_material_table_detailed, fit_model, load_rheology_csv, predict, DatasetKind, FitResult,
    RheologyDataset,
};
use vimsim_core::sim::rheometer::rheometer_step_limit;
use vimsim_core::sim::{
    format_sig9, perturbation_test, step_limit, thermal_transient, virtual_amplitude_sweep,
    virtual_creep_test, virtual_frequency_sweep, virtual_stress_relaxation,
};
use vimsim_core::{
    Channel, ImpedanceState, MaterialTable, ModelFamily, SimTrace, ThermalModel, VimGeometry,
};

use crate::config::{ExperimentConfig, MaterialSpec, OutputFormat, ProtocolSpec};
use crate::summary::*;

/// Upper bound on fixed steps for one run.
pub const MAX_STEPS: f64 = 2e7;

/// A config that passed every check and is ready to run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub geometry: VimGeometry,
    pub table: MaterialTable,
    pub thermal: ThermalModel,
    /// Rheometer step actually used (after picking defaults).
    pub rheometer_dt: Option<f64>,
    pub datasets: Vec<(String, RheologyDataset)>,
}

/// Resolves files and checks the physics; returns every violation found.
pub fn prepare(config: ExperimentConfig) -> Result<Prepared, Vec<String>> {
    let mut errors = Vec::new();
    let geometry = config.geometry.to_si();
    let table = match &config.material {
        MaterialSpec::Default => Some(MaterialTable::pcl_default()),
        MaterialSpec::Inline { table } => Some(table.clone()),
        MaterialSpec::File { path } => {
            let full = config.resolve_path(path);
            std::fs::read_to_string(&full)
                .map_err(|e| format!("material.path: cannot read {}: {e}", full.display()))
                .and_then(|t| {
                    MaterialTable::from_json(&t)
                        .map_err(|e| format!("material.path: {}: {e}", full.display()))
                })
                .map_err(|e| errors.push(e))
                .ok()
        }
    };
    let thermal = ThermalModel::calibrated(config.thermal.mode, &config.thermal.calibration())
        .map_err(|e| errors.push(format!("thermal: {e}")))
        .ok();

    let mut rheometer_dt = None;
    let mut datasets = Vec::new();
    let step_budget = |key: &str, dt: f64, total: f64, errors: &mut Vec<String>| {
        let steps = (total / dt).ceil();
        if steps > MAX_STEPS {
            errors.push(format!(
                "protocol.{key}: {steps:e} steps of {dt:e} s exceed the {MAX_STEPS:e} step budget; \
                 shorten the protocol or raise dt"
            ));
        }
    };

    match (&config.protocol, &table) {
        (ProtocolSpec::Perturbation(p), Some(table)) => {
            if p.theta0_rad.abs() > geometry.max_deflection {
                errors.push(format!(
                    "protocol.theta0_rad: |{}| rad exceeds geometry.max_deflection_rad {} rad",
                    p.theta0_rad, geometry.max_deflection
                ));
            }
            if p.theta0_rad == 0.0 {
                errors.push("protocol.theta0_rad: a zero release angle carries no response".into());
            }
            if p.duration_s < p.dt_s {
                errors.push(format!(
                    "protocol.duration_s: {} s is shorter than dt {} s",
                    p.duration_s, p.dt_s
                ));
            }
            match ImpedanceState::at_temperature(&geometry, table, p.temperature_c) {
                Ok((imp, _)) => {
                    let limit = step_limit(imp.natural_frequency(geometry.link_inertia));
                    if p.dt_s > limit {
                        errors.push(format!(
                            "protocol.dt_s: {} s is above the stability limit at {} degC; dt must be <= {:.6e} s",
                            p.dt_s, p.temperature_c, limit
                        ));
                    }
                    step_budget("duration_s", p.dt_s, p.duration_s, &mut errors);
                }
                Err(e) => errors.push(format!("geometry: {e}")),
            }
        }
        (ProtocolSpec::Creep(p), Some(table)) => {
            let model = table.params_at_temperature(p.temperature_c);
            let limit = rheometer_step_limit(&model);
            let dt = p.dt_s.unwrap_or(limit);
            if dt > limit {
                errors.push(format!(
                    "protocol.dt_s: {dt} s is above the stability limit at {} degC; dt must be <= {limit:.6e} s",
                    p.temperature_c
                ));
            }
            step_budget("dt_s", dt, p.load_s + p.recovery_s, &mut errors);
            rheometer_dt = Some(dt);
        }
        (ProtocolSpec::Relaxation(p), Some(table)) => {
            let model = table.params_at_temperature(p.temperature_c);
            let limit = rheometer_step_limit(&model);
            let dt = p.dt_s.unwrap_or(limit);
            if dt > limit {
                errors.push(format!(
                    "protocol.dt_s: {dt} s is above the stability limit at {} degC; dt must be <= {limit:.6e} s",
                    p.temperature_c
                ));
            }
            if p.ramp_s == 0.0 && model.family == ModelFamily::KelvinVoigt {
                errors.push(
                    "protocol.ramp_s: a strain step on a Kelvin-Voigt material needs a ramp > 0".into(),
                );
            }
            step_budget("dt_s", dt, p.ramp_s + p.hold_s, &mut errors);
            rheometer_dt = Some(dt);
        }
        (ProtocolSpec::Thermal(p), _) => {
            if p.duration_s < p.dt_s {
                errors.push(format!(
                    "protocol.duration_s: {} s is shorter than dt {} s",
                    p.duration_s, p.dt_s
                ));
            }
            step_budget("dt_s", p.dt_s, p.duration_s, &mut errors);
        }
        (ProtocolSpec::Fit(p), _) => {
            if p.family == ModelFamily::KelvinVoigt && p.kind == DatasetKind::StressRelaxation {
                errors.push(
                    "protocol.family: kelvin_voigt cannot be fitted to stress_relaxation data".into(),
                );
            }
            let mut temps: Vec<f64> = p.datasets.iter().map(|d| d.temperature_c).collect();
            temps.sort_by(f64::total_cmp);
            if let Some(w) = temps.windows(2).find(|w| w[0] == w[1]) {
                errors.push(format!("protocol.datasets: duplicate temperature {} degC", w[0]));
            }
            for (i, d) in p.datasets.iter().enumerate() {
                let full = config.resolve_path(&d.path);
                let key = format!("protocol.datasets.{i} ({})", full.display());
                let loaded = std::fs::File::open(&full)
                    .map_err(|e| format!("{key}: cannot open: {e}"))
                    .and_then(|f| {
                        load_rheology_csv(f, p.kind, d.temperature_c).map_err(|e| format!("{key}: {e}"))
                    })
                    .and_then(|ds| match d.relaxation_strain {
                        Some(s) => ds.with_relaxation_strain(s).map_err(|e| format!("{key}: {e}")),
                        None => Ok(ds),
                    });
                match loaded {
                    Ok(ds) if p.kind == DatasetKind::Perturbation => {
                        datasets.push((d.path.display().to_string(), ds.with_geometry(geometry)))
                    }
                    Ok(ds) => datasets.push((d.path.display().to_string(), ds)),
                    Err(e) => errors.push(e),
                }
            }
        }
        _ => {}
    }

    match (table, thermal) {
        (Some(table), Some(thermal)) if errors.is_empty() => Ok(Prepared {
            config,
            geometry,
            table,
            thermal,
            rheometer_dt,
            datasets,
        }),
        _ => Err(errors),
    }
}

/// Files produced by one run, relative to its output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub summary: Summary,
    pub files: Vec<(PathBuf, String)>,
}

struct Plot {
    name: String,
    title: String,
    x: (String, Vec<f64>),
    y: (String, Vec<f64>),
    log_x: bool,
}

struct Builder<'a> {
    digest: &'a str,
    format: OutputFormat,
    max_rows: usize,
    files: Vec<(PathBuf, String)>,
    plots: Vec<Plot>,
}

impl Builder<'_> {
    fn trace(&mut self, trace: SimTrace) {
        let trace = decimate(&trace, self.max_rows).with_metadata("config_digest", self.digest);
        if self.format.csv() {
            self.files.push(("trace.csv".into(), trace.to_csv_string()));
        }
        if self.format.json() {
            self.files.push(("trace.json".into(), pretty(&trace.to_json())));
        }
    }

    fn table(&mut self, stem: &str, header: &[&str], rows: &[Vec<f64>], json: serde_json::Value) {
        if self.format.csv() {
            let mut s = format!("# config_digest={}\n{}\n", self.digest, header.join(","));
            for r in rows {
                let cells: Vec<String> = r.iter().map(|v| format_sig9(*v)).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            self.files.push((format!("{stem}.csv").into(), s));
        }
        if self.format.json() {
            let v = serde_json::json!({"config_digest": self.digest, "rows": json});
            self.files.push((format!("{stem}.json").into(), pretty(&rounded(v))));
        }
    }

    fn plot(&mut self, p: Plot) {
        self.plots.push(p);
    }

    fn finish(mut self, summary: Summary) -> Artifacts {
        let mut script = format!(
            "# gnuplot script; run `gnuplot plot.gp` inside this directory\n# config_digest={}\nset terminal pngcairo size 900,600\nset grid\n",
            self.digest
        );
        for p in &self.plots {
            let mut dat = format!("# config_digest={}\n# {} {}\n", self.digest, p.x.0, p.y.0);
            let n = p.x.1.len();
            let stride = n.div_ceil(self.max_rows.max(1)).max(1);
            for i in (0..n).step_by(stride) {
                let _ = writeln!(dat, "{} {}", format_sig9(p.x.1[i]), format_sig9(p.y.1[i]));
            }
            self.files.push((format!("plots/{}.dat", p.name).into(), dat));
            let _ = writeln!(
                script,
                "\nset output '{name}.png'\n{logx}set xlabel '{xl}'\nset ylabel '{yl}'\nplot '{name}.dat' using 1:2 with linespoints title '{title}'\n{unlog}",
                name = p.name,
                logx = if p.log_x { "set logscale xy\n" } else { "" },
                unlog = if p.log_x { "unset logscale\n" } else { "" },
                xl = p.x.0,
                yl = p.y.0,
                title = p.title,
            );
        }
        if !self.plots.is_empty() {
            self.files.push(("plots/plot.gp".into(), script));
        }
        let value = rounded(serde_json::to_value(&summary).expect("summary serializes"));
        self.files.push(("summary.json".into(), pretty(&value)));
        let summary = serde_json::from_value(value).expect("rounded summary deserializes");
        Artifacts {
            summary,
            files: self.files,
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

/// Keeps every `stride`-th sample so at most `max_rows` remain.
pub fn decimate(trace: &SimTrace, max_rows: usize) -> SimTrace {
    let stride = trace.len().div_ceil(max_rows.max(2)).max(1);
    if stride == 1 {
        return trace.clone();
    }
    let cols = trace
        .channels()
        .map(|c| {
            let v = trace.column(c).expect("listed channel exists");
            (c, v.iter().step_by(stride).copied().collect())
        })
        .collect();
    let mut out = SimTrace::new(trace.dt() * stride as f64, cols).expect("strided trace is valid");
    out.metadata = trace.metadata.clone();
    out.with_metadata("stride", stride.to_string())
}

fn col(trace: &SimTrace, c: Channel) -> Vec<f64> {
    trace.column(c).map(<[f64]>::to_vec).unwrap_or_default()
}

/// Runs the configured protocol.
pub fn execute(p: &Prepared) -> anyhow::Result<Artifacts> {
    let cfg = &p.config;
    let digest = cfg.digest();
    let mut b = Builder {
        digest: &digest,
        format: cfg.output.format,
        max_rows: cfg.output.max_rows,
        files: Vec::new(),
        plots: Vec::new(),
    };
    let springs = SpringReport::new(&p.geometry)?;

    let results = match &cfg.protocol {
        ProtocolSpec::Perturbation(q) => {
            let r = perturbation_test(&p.geometry, &p.table, q.temperature_c, q.theta0_rad, q.dt_s, q.duration_s)
                .context("perturbation test")?;
            let tr = decimate(&r.trace, b.max_rows);
            b.plot(Plot {
                name: "angle_vs_time".into(),
                title: format!("release from {} rad at {} degC", q.theta0_rad, q.temperature_c),
                x: ("time_s".into(), tr.time().to_vec()),
                y: ("theta_rad".into(), col(&tr, Channel::Theta)),
                log_x: false,
            });
            b.plot(Plot {
                name: "torque_vs_angle".into(),
                title: format!("torque-angle at {} degC", q.temperature_c),
                x: ("theta_rad".into(), col(&tr, Channel::Theta)),
                y: ("torque_nm".into(), col(&tr, Channel::Torque)),
                log_x: false,
            });
            let summary = r.summary(q.theta0_rad);
            b.trace(r.trace);
            ProtocolResults::Perturbation(summary)
        }
        ProtocolSpec::FreqSweep(q) => {
            let model = p.table.params_at_temperature(q.temperature_c);
            let sweep = virtual_frequency_sweep(
                &model,
                q.omega_min_rad_s,
                q.omega_max_rad_s,
                q.points_per_decade,
                q.strain_amplitude,
            )?;
            let rows: Vec<Vec<f64>> = sweep
                .rows
                .iter()
                .map(|r| vec![r.omega_rad_s, r.storage_pa, r.loss_pa, r.complex_viscosity_pas, r.loss_factor])
                .collect();
            b.table(
                "sweep",
                &["omega_rad_s", "storage_pa", "loss_pa", "complex_viscosity_pas", "loss_factor"],
                &rows,
                serde_json::to_value(&sweep.rows)?,
            );
            let omega: Vec<f64> = sweep.rows.iter().map(|r| r.omega_rad_s).collect();
            for (name, label, idx) in [
                ("storage_modulus", "storage_pa", 1),
                ("loss_modulus", "loss_pa", 2),
                ("complex_viscosity", "complex_viscosity_pas", 3),
            ] {
                b.plot(Plot {
                    name: name.into(),
                    title: format!("{label} at {} degC", q.temperature_c),
                    x: ("omega_rad_s".into(), omega.clone()),
                    y: (label.into(), rows.iter().map(|r| r[idx]).collect()),
                    log_x: true,
                });
            }
            ProtocolResults::FreqSweep(FreqSweepResults {
                temperature_c: q.temperature_c,
                model,
                strain_amplitude: q.strain_amplitude,
                points: sweep.rows.len(),
                omega_min_rad_s: q.omega_min_rad_s,
                omega_max_rad_s: q.omega_max_rad_s,
            })
        }
        ProtocolSpec::Creep(q) => {
            let model = p.table.params_at_temperature(q.temperature_c);
            let dt = p.rheometer_dt.expect("set by prepare");
            let tr = virtual_creep_test(&model, q.stress_pa, q.load_s, q.recovery_s, dt)?
                .with_metadata("temperature_c", q.temperature_c.to_string());
            let strain = col(&tr, Channel::Strain);
            let small = decimate(&tr, b.max_rows);
            b.plot(Plot {
                name: "strain_vs_time".into(),
                title: format!("creep at {} Pa, {} degC", q.stress_pa, q.temperature_c),
                x: ("time_s".into(), small.time().to_vec()),
                y: ("strain".into(), col(&small, Channel::Strain)),
                log_x: false,
            });
            b.trace(tr);
            ProtocolResults::Creep(CreepResults {
                temperature_c: q.temperature_c,
                model,
                stress_pa: q.stress_pa,
                dt_s: dt,
                peak_strain: strain.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                expected_peak_strain: q.stress_pa * model.creep_compliance(q.load_s)?,
                final_strain: *strain.last().unwrap_or(&f64::NAN),
            })
        }
        ProtocolSpec::Relaxation(q) => {
            let model = p.table.params_at_temperature(q.temperature_c);
            let dt = p.rheometer_dt.expect("set by prepare");
            let tr = virtual_stress_relaxation(&model, q.strain, q.ramp_s, q.hold_s, dt)?
                .with_metadata("temperature_c", q.temperature_c.to_string());
            let stress = col(&tr, Channel::Stress);
            let small = decimate(&tr, b.max_rows);
            b.plot(Plot {
                name: "stress_vs_time".into(),
                title: format!("relaxation at strain {}, {} degC", q.strain, q.temperature_c),
                x: ("time_s".into(), small.time().to_vec()),
                y: ("stress_pa".into(), col(&small, Channel::Stress)),
                log_x: false,
            });
            b.trace(tr);
            ProtocolResults::Relaxation(RelaxationResults {
                temperature_c: q.temperature_c,
                model,
                strain: q.strain,
                dt_s: dt,
                peak_stress_pa: stress.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                final_stress_pa: *stress.last().unwrap_or(&f64::NAN),
            })
        }
        ProtocolSpec::AmplitudeSweep(q) => {
            let model = p.table.params_at_temperature(q.temperature_c);
            let rows = virtual_amplitude_sweep(
                &model,
                q.strain_min,
                q.strain_max,
                q.points,
                q.omega_rad_s,
                q.linearity_limit,
            )?;
            let table: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.strain, r.storage_pa, r.loss_pa]).collect();
            b.table(
                "amplitude_sweep",
                &["strain", "storage_pa", "loss_pa"],
                &table,
                serde_json::to_value(&rows)?,
            );
            let strain: Vec<f64> = rows.iter().map(|r| r.strain).collect();
            b.plot(Plot {
                name: "storage_vs_strain".into(),
                title: format!("storage modulus at {} rad/s", q.omega_rad_s),
                x: ("strain".into(), strain.clone()),
                y: ("storage_pa".into(), rows.iter().map(|r| r.storage_pa).collect()),
                log_x: true,
            });
            b.plot(Plot {
                name: "loss_vs_strain".into(),
                title: format!("loss modulus at {} rad/s", q.omega_rad_s),
                x: ("strain".into(), strain),
                y: ("loss_pa".into(), rows.iter().map(|r| r.loss_pa).collect()),
                log_x: true,
            });
            let g0 = rows[0].storage_pa;
            let end = rows
                .iter()
                .take_while(|r| (r.storage_pa / g0 - 1.0).abs() <= 0.05)
                .last()
                .map_or(rows[0].strain, |r| r.strain);
            ProtocolResults::AmplitudeSweep(AmplitudeSweepResults {
                temperature_c: q.temperature_c,
                model,
                omega_rad_s: q.omega_rad_s,
                points: rows.len(),
                linear_region_end_strain: end,
            })
        }
        ProtocolSpec::Thermal(q) => {
            let m = &p.thermal;
            let start = q.start_c.unwrap_or(m.ambient_c);
            let tr = thermal_transient(m, start, q.current_a, q.dt_s, q.duration_s)?
                .with_metadata("current_a", q.current_a.to_string());
            let crossing = tr.first_crossing(Channel::Temperature, q.target_c);
            let small = decimate(&tr, b.max_rows);
            b.plot(Plot {
                name: "temperature_vs_time".into(),
                title: format!("{:?} heating at {} A", m.mode, q.current_a).to_lowercase(),
                x: ("time_s".into(), small.time().to_vec()),
                y: ("temp_c".into(), col(&small, Channel::Temperature)),
                log_x: false,
            });
            b.trace(tr);
            ProtocolResults::Thermal(ThermalResults {
                mode: m.mode,
                tau_s: m.tau_s,
                gain_c_per_a2: m.gain_c_per_a2,
                current_a: q.current_a,
                start_c: start,
                steady_state_c: m.steady_state(q.current_a),
                target_c: q.target_c,
                time_to_target_s: m.time_to_reach(start, q.target_c, q.current_a).ok(),
                trace_crossing_s: crossing,
            })
        }
        ProtocolSpec::Fit(q) => {
            let (table, fits): (Option<MaterialTable>, Vec<FitResult>) = if p.datasets.len() >= 2 {
                let all: Vec<RheologyDataset> = p.datasets.iter().map(|d| d.1.clone()).collect();
                let (t, f) = fit_material_table_detailed(&all, q.family)?;
                (Some(t), f)
            } else {
                let (_, ds) = &p.datasets[0];
                let f = fit_model(ds, q.family, None)
                    .with_context(|| format!("fit at {} degC", ds.temperature_c))?;
                (None, vec![f])
            };
            // fits come back in temperature order
            let mut order: Vec<&(String, RheologyDataset)> = p.datasets.iter().collect();
            order.sort_by(|a, b| a.1.temperature_c.total_cmp(&b.1.temperature_c));
            let mut entries = Vec::new();
            for ((path, ds), fit) in order.into_iter().zip(fits) {
                let pred = predict(&fit.model, ds)?;
                let t = ds.temperature_c;
                let ylabel = ds.kind.columns()[1];
                let xlabel = ds.kind.columns()[0];
                b.plots.push(Plot {
                    name: format!("fit_{t}c_observed"),
                    title: format!("{ylabel} observed at {t} degC"),
                    x: (xlabel.to_string(), ds.x.clone()),
                    y: (ylabel.to_string(), ds.y[0].clone()),
                    log_x: ds.kind != DatasetKind::Perturbation,
                });
                b.plots.push(Plot {
                    name: format!("fit_{t}c_model"),
                    title: format!("{ylabel} fitted at {t} degC"),
                    x: (xlabel.to_string(), ds.x.clone()),
                    y: (ylabel.to_string(), pred[0].clone()),
                    log_x: ds.kind != DatasetKind::Perturbation,
                });
                entries.push(FitEntry {
                    temperature_c: t,
                    dataset: path.clone(),
                    result: fit,
                });
            }
            if let Some(t) = &table {
                let mut v = serde_json::to_value(t)?;
                v["config_digest"] = digest.clone().into();
                b.files.push(("material_table.json".into(), pretty(&rounded(v))));
            }
            ProtocolResults::Fit(FitResults {
                family: q.family,
                kind: q.kind,
                fits: entries,
                table,
            })
        }
    };

    let summary = Summary {
        config_digest: digest.clone(),
        spring_stiffness: springs,
        results,
    };
    Ok(b.finish(summary))
}
