use std::f64::consts::PI;

use log::warn;

use super::trace::{Channel, SimTrace};
use crate::error::{domain, Error, Result};
use crate::mechanics::{eom_accel, ImpedanceState, VimGeometry, SMALL_ANGLE_LIMIT};

/// Minimum number of steps per natural period accepted by fixed-step RK4.
pub const STEPS_PER_PERIOD: f64 = 50.0;

/// One classical fourth-order Runge-Kutta step of `y' = f(t, y)`.
pub fn rk4_step<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let axpy = |a: &[f64; N], k: &[f64; N], s: f64| {
        let mut out = *a;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += s * ki;
        }
        out
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &axpy(y, &k2, 0.5 * h));
    let k4 = f(t + h, &axpy(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Largest step that resolves a mode of angular frequency `omega` with
/// [`STEPS_PER_PERIOD`] steps.
pub fn step_limit(omega: f64) -> f64 {
    2.0 * PI / omega / STEPS_PER_PERIOD
}

pub(crate) fn check_step(dt: f64, max_dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(domain(format!("dt must be > 0, got {dt}")));
    }
    if dt > max_dt {
        return Err(Error::StabilityGuard { dt, max_dt });
    }
    Ok(())
}

pub(crate) fn step_count(dt: f64, duration: f64) -> Result<usize> {
    if !(duration.is_finite() && duration >= dt) {
        return Err(domain(format!(
            "duration {duration} s must be >= dt {dt} s"
        )));
    }
    Ok((duration / dt).round() as usize)
}

/// Fixed-step RK4 simulation of the output link.
///
/// The torque column records the sensed restoring torque `K theta + b theta'`.
/// The angle is held inside `+/- max_deflection`; a link reaching the stop
/// loses its outward velocity.
pub fn integrate(
    geom: &VimGeometry,
    imp: &ImpedanceState,
    theta0: f64,
    theta_dot0: f64,
    external_torque: impl Fn(f64) -> f64,
    dt: f64,
    duration: f64,
) -> Result<SimTrace> {
    geom.validate()?;
    let inertia = geom.link_inertia;
    check_step(dt, step_limit(imp.natural_frequency(inertia)))?;
    let steps = step_count(dt, duration)?;
    if theta0.abs() > geom.max_deflection {
        return Err(domain(format!(
            "initial angle {theta0} rad exceeds max deflection {} rad",
            geom.max_deflection
        )));
    }
    if theta0.abs() > SMALL_ANGLE_LIMIT {
        warn!("initial angle {theta0} rad is outside the small-angle regime");
    }

    let k_total = imp.total_stiffness();
    let rhs = |t: f64, y: &[f64; 2]| [y[1], eom_accel(y[0], y[1], imp, external_torque(t), inertia)];
    let limit = geom.max_deflection;

    let n = steps + 1;
    let mut theta = Vec::with_capacity(n);
    let mut omega = Vec::with_capacity(n);
    let mut y = [theta0, theta_dot0];
    theta.push(y[0]);
    omega.push(y[1]);
    for i in 0..steps {
        y = rk4_step(rhs, i as f64 * dt, &y, dt);
        if y[0].abs() > limit {
            y[0] = limit.copysign(y[0]);
            if y[1] * y[0] > 0.0 {
                y[1] = 0.0;
            }
        }
        theta.push(y[0]);
        omega.push(y[1]);
    }
    let torque = theta
        .iter()
        .zip(&omega)
        .map(|(th, om)| k_total * th + imp.b_pcl * om)
        .collect();
    SimTrace::new(
        dt,
        vec![
            (Channel::Theta, theta),
            (Channel::ThetaDot, omega),
            (Channel::Torque, torque),
            (Channel::Temperature, vec![imp.temperature_c; n]),
        ],
    )
}

/// `I theta'^2 / 2 + K theta^2 / 2` at every sample of a link trace.
pub fn mechanical_energy(trace: &SimTrace, imp: &ImpedanceState, inertia: f64) -> Result<Vec<f64>> {
    let theta = trace.require(Channel::Theta)?;
    let omega = trace.require(Channel::ThetaDot)?;
    let k = imp.total_stiffness();
    Ok(theta
        .iter()
        .zip(omega)
        .map(|(th, om)| 0.5 * inertia * om * om + 0.5 * k * th * th)
        .collect())
}
