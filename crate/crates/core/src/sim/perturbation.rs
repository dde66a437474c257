use serde::{Deserialize, Serialize};

use super::dynamics::integrate;
use super::identify::{extract_damping, extract_stiffness, settle_time, DampingEstimate};
use super::trace::SimTrace;
use crate::error::{domain, Result};
use crate::mechanics::{ImpedanceState, VimGeometry};
use crate::thermo::MaterialTable;

/// Fraction of the release angle that counts as settled.
pub const SETTLE_BAND: f64 = 0.02;

/// Release-from-deflection test at one temperature.
#[derive(Debug, Clone)]
pub struct PerturbationResult {
    pub trace: SimTrace,
    /// Configured impedance the trace was generated with.
    pub impedance: ImpedanceState,
    /// Frequency (rad/s) at which the PCL moduli were linearised.
    pub linearization_omega: f64,
    /// N*m/rad, identified from the trace.
    pub effective_stiffness: f64,
    pub damping: DampingEstimate,
    pub damping_ratio: f64,
    /// s; `None` when the link has not settled by the end of the trace.
    pub settle_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSummary {
    pub temperature_c: f64,
    pub theta0_rad: f64,
    pub k_spring_total_nm_per_rad: f64,
    pub k_pcl_nm_per_rad: f64,
    pub b_pcl_nms_per_rad: f64,
    pub linearization_omega_rad_s: f64,
    pub effective_stiffness_nm_per_rad: f64,
    pub damping_ratio: f64,
    pub damping: DampingEstimate,
    pub settle_time_s: Option<f64>,
}

impl PerturbationResult {
    pub fn summary(&self, theta0: f64) -> PerturbationSummary {
        PerturbationSummary {
            temperature_c: self.impedance.temperature_c,
            theta0_rad: theta0,
            k_spring_total_nm_per_rad: self.impedance.k_spring_total,
            k_pcl_nm_per_rad: self.impedance.k_pcl,
            b_pcl_nms_per_rad: self.impedance.b_pcl,
            linearization_omega_rad_s: self.linearization_omega,
            effective_stiffness_nm_per_rad: self.effective_stiffness,
            damping_ratio: self.damping_ratio,
            damping: self.damping,
            settle_time_s: self.settle_time,
        }
    }
}

/// Deflects the link to `theta0`, releases it with no external torque and
/// identifies stiffness and damping from the recorded free decay.
pub fn perturbation_test(
    geom: &VimGeometry,
    table: &MaterialTable,
    temperature_c: f64,
    theta0: f64,
    dt: f64,
    duration: f64,
) -> Result<PerturbationResult> {
    if !(theta0.abs() <= geom.max_deflection) {
        return Err(domain(format!(
            "release angle {theta0} rad exceeds max deflection {} rad",
            geom.max_deflection
        )));
    }
    let (impedance, omega) = ImpedanceState::at_temperature(geom, table, temperature_c)?;
    let trace = integrate(geom, &impedance, theta0, 0.0, |_| 0.0, dt, duration)?
        .with_metadata("protocol", "perturbation")
        .with_metadata("temperature_c", temperature_c.to_string());
    let effective_stiffness = extract_stiffness(&trace)?;
    let damping = extract_damping(&trace)?;
    Ok(PerturbationResult {
        settle_time: settle_time(&trace, SETTLE_BAND),
        trace,
        impedance,
        linearization_omega: omega,
        effective_stiffness,
        damping_ratio: damping.zeta(),
        damping,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use approx::assert_relative_eq;

    #[test]
    fn cold_release_round_trips_stiffness() {
        let g = VimGeometry::nominal();
        let table = MaterialTable::pcl_default();
        let r = perturbation_test(&g, &table, 30.0, 0.1, 2e-5, 0.2).unwrap();
        let expected = r.impedance.k_spring_total + r.impedance.k_pcl;
        assert_relative_eq!(r.effective_stiffness, expected, max_relative = 0.02);
        assert!(matches!(r.damping, DampingEstimate::Underdamped { .. }));
    }

    #[test]
    fn hot_is_more_damped_than_cold() {
        let g = VimGeometry::nominal();
        let table = MaterialTable::pcl_default();
        let cold = perturbation_test(&g, &table, 30.0, 0.1, 2e-5, 0.5).unwrap();
        let hot = perturbation_test(&g, &table, 100.0, 0.1, 2e-5, 0.5).unwrap();
        assert!(hot.damping_ratio > cold.damping_ratio);
    }

    #[test]
    fn zero_release_is_degenerate() {
        let g = VimGeometry::nominal();
        let table = MaterialTable::pcl_default();
        let r = perturbation_test(&g, &table, 30.0, 0.0, 2e-5, 0.01);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn release_beyond_travel_is_rejected() {
        let g = VimGeometry::nominal();
        let table = MaterialTable::pcl_default();
        let r = perturbation_test(&g, &table, 30.0, 0.2, 2e-5, 0.01);
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
