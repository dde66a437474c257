//! Virtual rheometer: frequency sweep, creep, stress relaxation and
//! amplitude sweep applied to a constitutive model.

use serde::{Deserialize, Serialize};

use super::dynamics::{check_step, rk4_step, step_count, step_limit};
use super::trace::{Channel, SimTrace};
use crate::error::{domain, Result};
use crate::material::{ModelFamily, SampledSignal, ViscoelasticModel};

pub const SWEEP_OMEGA_MIN: f64 = 0.1;
pub const SWEEP_OMEGA_MAX: f64 = 628.0;
pub const SWEEP_POINTS_PER_DECADE: usize = 10;
pub const SWEEP_STRAIN: f64 = 1e-4;

pub const CREEP_STRESS_PA: f64 = 50.0;
pub const CREEP_LOAD_S: f64 = 300.0;
pub const CREEP_RECOVERY_S: f64 = 600.0;

pub const RELAXATION_STRAIN: f64 = 0.10;
pub const RELAXATION_RAMP_S: f64 = 1.0;
pub const RELAXATION_HOLD_S: f64 = 200.0;

/// Oscillation frequency of the amplitude sweep, rad/s.
pub const AMPLITUDE_SWEEP_OMEGA: f64 = 10.0;

/// Largest step accepted by the time-domain protocols for `model`.
pub fn rheometer_step_limit(model: &ViscoelasticModel) -> f64 {
    step_limit(1.0 / model.time_constant())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub omega_rad_s: f64,
    pub storage_pa: f64,
    pub loss_pa: f64,
    pub complex_viscosity_pas: f64,
    pub loss_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySweep {
    pub strain_amplitude: f64,
    pub rows: Vec<SweepRow>,
}

/// Log-spaced frequency grid with `ceil(decades * points_per_decade) + 1`
/// points, the last one exactly at `omega_max`.
pub fn log_grid(lo: f64, hi: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(domain(format!("need 0 < min < max, got {lo} and {hi}")));
    }
    if points_per_decade == 0 {
        return Err(domain("points per decade must be >= 1"));
    }
    let span = (hi / lo).log10() * points_per_decade as f64;
    let near = span.round();
    let intervals = if (span - near).abs() < 1e-9 { near } else { span.ceil() } as usize;
    let mut grid: Vec<f64> = (0..intervals)
        .map(|i| lo * 10f64.powf(i as f64 / points_per_decade as f64))
        .collect();
    grid.push(hi);
    Ok(grid)
}

pub fn virtual_frequency_sweep(
    model: &ViscoelasticModel,
    omega_min: f64,
    omega_max: f64,
    points_per_decade: usize,
    strain_amplitude: f64,
) -> Result<FrequencySweep> {
    if !(strain_amplitude > 0.0) {
        return Err(domain(format!("strain amplitude must be > 0, got {strain_amplitude}")));
    }
    let rows = log_grid(omega_min, omega_max, points_per_decade)?
        .into_iter()
        .map(|w| {
            let cm = model.complex_modulus(w)?;
            Ok(SweepRow {
                omega_rad_s: w,
                storage_pa: cm.storage,
                loss_pa: cm.loss,
                complex_viscosity_pas: cm.complex_viscosity()?,
                loss_factor: cm.loss_factor(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(FrequencySweep {
        strain_amplitude,
        rows,
    })
}

/// Constant stress for `load_duration`, then zero stress for `recovery_duration`.
///
/// The constitutive ODE is integrated under stress control with RK4; the
/// applied stress is held constant over each step at its mid-step value, so
/// the load is on for `t <= load_duration`. Returns stress and strain columns.
pub fn virtual_creep_test(
    model: &ViscoelasticModel,
    stress: f64,
    load_duration: f64,
    recovery_duration: f64,
    dt: f64,
) -> Result<SimTrace> {
    model.validate()?;
    if !(stress > 0.0 && stress.is_finite()) {
        return Err(domain(format!("creep stress must be > 0, got {stress}")));
    }
    if !(load_duration > 0.0 && recovery_duration > 0.0) {
        return Err(domain("load and recovery durations must be > 0"));
    }
    check_step(dt, rheometer_step_limit(model))?;
    let steps = step_count(dt, load_duration + recovery_duration)?;
    let applied = |t: f64| if t <= load_duration { stress } else { 0.0 };

    let (e1, eta) = (model.e1, model.eta);
    let e2 = model.e2.unwrap_or(0.0);
    // internal state q: total strain (KV) or dashpot strain (Maxwell, Zener)
    let rate = |q: f64, s: f64| match model.family {
        ModelFamily::KelvinVoigt => (s - e1 * q) / eta,
        ModelFamily::Maxwell => s / eta,
        ModelFamily::Zener => e1 * ((s + e1 * q) / (e1 + e2) - q) / eta,
    };
    let strain_of = |q: f64, s: f64| match model.family {
        ModelFamily::KelvinVoigt => q,
        ModelFamily::Maxwell => s / e1 + q,
        ModelFamily::Zener => (s + e1 * q) / (e1 + e2),
    };

    let n = steps + 1;
    let mut stress_col = Vec::with_capacity(n);
    let mut strain_col = Vec::with_capacity(n);
    let mut q = 0.0;
    stress_col.push(applied(0.0));
    strain_col.push(strain_of(q, applied(0.0)));
    for i in 0..steps {
        let t = i as f64 * dt;
        let s_step = applied(t + 0.5 * dt);
        q = rk4_step(|_, y: &[f64; 1]| [rate(y[0], s_step)], t, &[q], dt)[0];
        let s_now = applied(t + dt);
        stress_col.push(s_now);
        strain_col.push(strain_of(q, s_now));
    }
    Ok(SimTrace::new(dt, vec![(Channel::Stress, stress_col), (Channel::Strain, strain_col)])?
        .with_metadata("protocol", "creep")
        .with_metadata("family", model.family.to_string()))
}

/// Ramp the strain linearly to `strain_target` over `ramp_time`, then hold.
///
/// A zero ramp applies the strain as a step at `t = 0`, which is rejected
/// for Kelvin-Voigt (impulsive stress). Returns strain and stress columns.
pub fn virtual_stress_relaxation(
    model: &ViscoelasticModel,
    strain_target: f64,
    ramp_time: f64,
    hold_time: f64,
    dt: f64,
) -> Result<SimTrace> {
    model.validate()?;
    if !(strain_target > 0.0 && strain_target.is_finite()) {
        return Err(domain(format!("target strain must be > 0, got {strain_target}")));
    }
    if !(ramp_time >= 0.0 && hold_time > 0.0) {
        return Err(domain("ramp time must be >= 0 and hold time > 0"));
    }
    if ramp_time == 0.0 && model.family == ModelFamily::KelvinVoigt {
        return Err(domain(
            "a strain step on a Kelvin-Voigt model needs an infinite stress; use a ramp",
        ));
    }
    check_step(dt, rheometer_step_limit(model))?;
    let steps = step_count(dt, ramp_time + hold_time)?;
    let strain: Vec<f64> = (0..=steps)
        .map(|i| {
            let t = i as f64 * dt;
            if ramp_time == 0.0 {
                strain_target
            } else {
                strain_target * (t / ramp_time).min(1.0)
            }
        })
        .collect();
    let stress = model.stress_response(&SampledSignal::new(dt, strain.clone())?)?;
    Ok(SimTrace::new(dt, vec![(Channel::Strain, strain), (Channel::Stress, stress.values)])?
        .with_metadata("protocol", "relaxation")
        .with_metadata("family", model.family.to_string()))
}

/// Softening applied above a strain threshold to mimic leaving the linear
/// viscoelastic region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearityLimit {
    pub strain: f64,
    /// Multiplier applied to both moduli above `strain`.
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRow {
    pub strain: f64,
    pub storage_pa: f64,
    pub loss_pa: f64,
}

/// Log-spaced strain amplitudes at fixed frequency. Linear models give
/// constant moduli unless a [`LinearityLimit`] is configured.
pub fn virtual_amplitude_sweep(
    model: &ViscoelasticModel,
    strain_min: f64,
    strain_max: f64,
    points: usize,
    omega: f64,
    limit: Option<LinearityLimit>,
) -> Result<Vec<AmplitudeRow>> {
    if !(strain_min > 0.0 && strain_max > strain_min && strain_max.is_finite()) {
        return Err(domain(format!(
            "need 0 < strain_min < strain_max, got {strain_min} and {strain_max}"
        )));
    }
    if points == 0 {
        return Err(domain("amplitude sweep needs >= 1 point"));
    }
    let cm = model.complex_modulus(omega)?;
    let ratio = strain_max / strain_min;
    Ok((0..points)
        .map(|i| {
            let strain = if points == 1 {
                strain_min
            } else if i == points - 1 {
                strain_max
            } else {
                strain_min * ratio.powf(i as f64 / (points - 1) as f64)
            };
            let k = match limit {
                Some(l) if strain > l.strain => l.factor,
                _ => 1.0,
            };
            AmplitudeRow {
                strain,
                storage_pa: cm.storage * k,
                loss_pa: cm.loss * k,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_sizes() {
        let g = log_grid(0.1, 628.0, 10).unwrap();
        assert_eq!(g.len(), (3.798f64 * 10.0).ceil() as usize + 1);
        assert_eq!(*g.last().unwrap(), 628.0);
        assert_eq!(log_grid(0.1, 100.0, 10).unwrap().len(), 31);
        assert!(log_grid(1.0, 1.0, 10).is_err());
        assert!(log_grid(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn kv_sweep_storage_is_flat() {
        let m = ViscoelasticModel::kelvin_voigt(1000.0, 10.0).unwrap();
        let s = virtual_frequency_sweep(&m, 0.1, 628.0, 10, 1e-4).unwrap();
        assert!(s.rows.iter().all(|r| r.storage_pa == 1000.0));
    }

    #[test]
    fn maxwell_low_frequency_viscosity() {
        let m = ViscoelasticModel::maxwell(1e5, 100.0).unwrap();
        let s = virtual_frequency_sweep(&m, 0.1, 628.0, 10, 1e-4).unwrap();
        assert_relative_eq!(s.rows[0].complex_viscosity_pas, 100.0, max_relative = 0.01);
    }

    #[test]
    fn kv_creep_reaches_equilibrium_and_recovers() {
        let m = ViscoelasticModel::kelvin_voigt(1000.0, 1000.0).unwrap();
        let tr = virtual_creep_test(&m, 50.0, 30.0, 30.0, 1e-3).unwrap();
        let strain = tr.column(Channel::Strain).unwrap();
        let at_load_end = strain[30_000];
        assert_relative_eq!(at_load_end, 50.0 / 1000.0, max_relative = 1e-3);
        assert!(strain[strain.len() - 1].abs() < 0.01 * at_load_end);
    }

    #[test]
    fn maxwell_creep_flows_at_stress_over_eta() {
        let m = ViscoelasticModel::maxwell(1000.0, 200.0).unwrap();
        let tr = virtual_creep_test(&m, 50.0, 10.0, 5.0, 1e-3).unwrap();
        let strain = tr.column(Channel::Strain).unwrap();
        let slope = (strain[8000] - strain[2000]) / 6.0;
        assert_relative_eq!(slope, 50.0 / 200.0, max_relative = 5e-3);
    }

    #[test]
    fn relaxation_examples() {
        let mx = ViscoelasticModel::maxwell(1000.0, 1000.0).unwrap();
        let tr = virtual_stress_relaxation(&mx, 0.1, 1.0, 5.0, 1e-3).unwrap();
        let s = tr.column(Channel::Stress).unwrap();
        // after the ramp the stress decays as exp(-t/tau)
        let ratio = s[3000] / s[2000];
        assert_relative_eq!(ratio, (-1.0f64).exp(), max_relative = 1e-2);

        let kv = ViscoelasticModel::kelvin_voigt(1000.0, 10.0).unwrap();
        let tr = virtual_stress_relaxation(&kv, 0.1, 1.0, 5.0, 1e-3).unwrap();
        let s = tr.column(Channel::Stress).unwrap();
        assert_relative_eq!(s[4000], 100.0, max_relative = 1e-12);

        assert!(virtual_stress_relaxation(&kv, 0.1, 0.0, 5.0, 1e-3).is_err());
        assert!(virtual_stress_relaxation(&mx, 0.1, 0.0, 5.0, 1e-3).is_ok());
    }

    #[test]
    fn amplitude_sweep_examples() {
        let m = ViscoelasticModel::kelvin_voigt(1000.0, 10.0).unwrap();
        let rows = virtual_amplitude_sweep(&m, 1e-4, 1.0, 9, 10.0, None).unwrap();
        assert!(rows.iter().all(|r| r.storage_pa == 1000.0 && r.loss_pa == 100.0));
        assert_eq!(rows.last().unwrap().strain, 1.0);

        let limit = LinearityLimit {
            strain: 0.05,
            factor: 0.5,
        };
        let rows = virtual_amplitude_sweep(&m, 1e-4, 1.0, 9, 10.0, Some(limit)).unwrap();
        for r in rows {
            let expected = if r.strain > 0.05 { 500.0 } else { 1000.0 };
            assert_eq!(r.storage_pa, expected);
        }

        assert_eq!(virtual_amplitude_sweep(&m, 1e-4, 1.0, 1, 10.0, None).unwrap().len(), 1);
        assert!(virtual_amplitude_sweep(&m, 1.0, 1e-4, 3, 10.0, None).is_err());
    }

    #[test]
    fn creep_step_guard() {
        let m = ViscoelasticModel::kelvin_voigt(1000.0, 1.0).unwrap();
        assert!(matches!(
            virtual_creep_test(&m, 50.0, 1.0, 1.0, 0.01),
            Err(crate::Error::StabilityGuard { .. })
        ));
    }
}
