//! Stiffness and damping identification from free-decay traces.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::trace::{Channel, SimTrace};
use crate::error::{Error, Result};

/// Peaks below this fraction of the largest excursion are ignored.
const PEAK_FLOOR: f64 = 1e-7;

/// Least-squares joint stiffness from the torque and angle columns.
///
/// Torque is regressed on angle and, when the trace carries a non-trivial
/// angular velocity column, on velocity as well, so the viscous part of the
/// sensed torque does not bias the stiffness. Returns the angle coefficient.
pub fn extract_stiffness(trace: &SimTrace) -> Result<f64> {
    let theta = trace.require(Channel::Theta)?;
    let torque = trace.require(Channel::Torque)?;
    let rate = trace.column(Channel::ThetaDot);
    stiffness_from_samples(theta, rate, torque)
}

pub fn stiffness_from_samples(theta: &[f64], rate: Option<&[f64]>, torque: &[f64]) -> Result<f64> {
    let (lo, hi) = theta
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if !(hi > lo) {
        return Err(Error::Degenerate(
            "angle is constant; torque-angle slope is undefined".into(),
        ));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let s_tt = dot(theta, theta);
    let s_tq = dot(theta, torque);
    let simple = s_tq / s_tt;
    let Some(rate) = rate else {
        return Ok(simple);
    };
    let s_rr = dot(rate, rate);
    let s_tr = dot(theta, rate);
    let s_rq = dot(rate, torque);
    let det = s_tt * s_rr - s_tr * s_tr;
    if s_rr == 0.0 || det <= 1e-12 * s_tt * s_rr {
        return Ok(simple);
    }
    Ok((s_tq * s_rr - s_tr * s_rq) / det)
}

/// Outcome of damping identification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum DampingEstimate {
    /// Oscillatory decay identified by logarithmic decrement.
    Underdamped {
        zeta: f64,
        log_decrement: f64,
        peaks_used: usize,
    },
    /// Monotone decay; `decay_rate` (1/s) from a fit to `ln|theta|`.
    Overdamped { decay_rate: f64 },
}

impl DampingEstimate {
    /// Damping ratio; overdamped traces report the lower bound 1.
    pub fn zeta(&self) -> f64 {
        match self {
            DampingEstimate::Underdamped { zeta, .. } => *zeta,
            DampingEstimate::Overdamped { .. } => 1.0,
        }
    }
}

pub fn extract_damping_ratio(trace: &SimTrace) -> Result<f64> {
    extract_damping(trace).map(|d| d.zeta())
}

pub fn extract_damping(trace: &SimTrace) -> Result<DampingEstimate> {
    damping_from_samples(trace.require(Channel::Theta)?, trace.dt())
}

/// Logarithmic decrement over successive same-sign peaks, falling back to an
/// exponential fit when the decay does not oscillate.
pub fn damping_from_samples(theta: &[f64], dt: f64) -> Result<DampingEstimate> {
    let (imax, amax) = theta
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
    if amax == 0.0 {
        return Err(Error::Degenerate("angle trace is identically zero".into()));
    }
    // follow the sign of the largest excursion
    let sign = theta[imax].signum();
    let peaks = refined_peaks(theta, sign, PEAK_FLOOR * amax);
    if peaks.len() >= 2 {
        let pairs = peaks.len() - 1;
        let delta = peaks.windows(2).map(|w| (w[0] / w[1]).ln()).sum::<f64>() / pairs as f64;
        let zeta = (delta / (4.0 * PI * PI + delta * delta).sqrt()).max(0.0);
        return Ok(DampingEstimate::Underdamped {
            zeta,
            log_decrement: delta,
            peaks_used: peaks.len(),
        });
    }
    exponential_fallback(theta, dt, imax, amax)
}

/// Heights of strict local extrema of `sign * theta`, refined by a parabola
/// through the three samples around each one.
fn refined_peaks(theta: &[f64], sign: f64, floor: f64) -> Vec<f64> {
    let mut peaks = Vec::new();
    for i in 1..theta.len().saturating_sub(1) {
        let (a, b, c) = (sign * theta[i - 1], sign * theta[i], sign * theta[i + 1]);
        if b > a && b > c && b > floor {
            let curvature = a - 2.0 * b + c;
            let offset = 0.5 * (a - c) / curvature;
            peaks.push(b - 0.25 * (a - c) * offset);
        }
    }
    peaks
}

fn exponential_fallback(theta: &[f64], dt: f64, imax: usize, amax: f64) -> Result<DampingEstimate> {
    let tail = &theta[imax..];
    let sign = theta[imax].signum();
    let slack = 1e-12 * amax;
    let monotone = tail.windows(2).all(|w| w[1].abs() <= w[0].abs() + slack)
        && tail.iter().all(|v| v * sign >= -slack);
    if !monotone {
        return Err(Error::Identification(
            "fewer than 2 peaks and the decay is not monotone".into(),
        ));
    }
    let floor = 1e-9 * amax;
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .enumerate()
        .take_while(|(_, v)| v.abs() > floor)
        .map(|(i, v)| ((imax + i) as f64 * dt, v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Identification(
            "not enough decaying samples for an exponential fit".into(),
        ));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(DampingEstimate::Overdamped {
        decay_rate: -sxy / sxx,
    })
}

/// First time after which `|theta|` stays below `fraction * |theta[0]|`.
pub fn settle_time(trace: &SimTrace, fraction: f64) -> Option<f64> {
    let theta = trace.column(Channel::Theta)?;
    let band = fraction * theta.first()?.abs();
    let last_outside = theta.iter().rposition(|v| v.abs() >= band);
    match last_outside {
        None => Some(0.0),
        Some(i) if i + 1 < theta.len() => Some(trace.time()[i + 1]),
        Some(_) => None,
    }
}
