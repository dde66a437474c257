//! Linear viscoelastic constitutive models.
//!
//! Three spring-dashpot families are provided:
//!
//! * **Kelvin-Voigt**: spring `E1` in parallel with dashpot `eta`,
//!   `sigma = E1 * eps + eta * d(eps)/dt`.
//! * **Maxwell**: spring `E1` in series with dashpot `eta`.
//! * **Zener** (standard linear solid, Maxwell form): an equilibrium spring
//!   `E2` in parallel with a Maxwell arm (`E1`, `eta`).
//!
//! All closed forms are pure functions of immutable values. The single time
//! constant `tau = eta / E1` is the retardation time for Kelvin-Voigt and the
//! relaxation time of the Maxwell arm otherwise.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    #[serde(alias = "KelvinVoigt", alias = "kv")]
    KelvinVoigt,
    #[serde(alias = "Maxwell")]
    Maxwell,
    #[serde(alias = "Zener", alias = "standard_linear_solid")]
    Zener,
}

impl ModelFamily {
    /// Number of free parameters in the family.
    pub fn parameter_count(self) -> usize {
        match self {
            ModelFamily::KelvinVoigt | ModelFamily::Maxwell => 2,
            ModelFamily::Zener => 3,
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFamily::KelvinVoigt => "kelvin_voigt",
            ModelFamily::Maxwell => "maxwell",
            ModelFamily::Zener => "zener",
        })
    }
}

/// A spring-dashpot model with moduli in Pa and viscosity in Pa*s.
///
/// `e2` is only read for [`ModelFamily::Zener`]; other families ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViscoelasticModel {
    pub family: ModelFamily,
    #[serde(rename = "e1_pa")]
    pub e1: f64,
    #[serde(rename = "eta_pas")]
    pub eta: f64,
    #[serde(rename = "e2_pa", default, skip_serializing_if = "Option::is_none")]
    pub e2: Option<f64>,
}

/// Storage and loss moduli at one angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexModulus {
    /// G' in Pa.
    pub storage: f64,
    /// G'' in Pa.
    pub loss: f64,
    /// rad/s
    pub omega: f64,
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(config(format!("{name} must be finite and > 0, got {value}")))
    }
}

impl ViscoelasticModel {
    pub fn kelvin_voigt(e1: f64, eta: f64) -> Result<Self> {
        let m = Self {
            family: ModelFamily::KelvinVoigt,
            e1,
            eta,
            e2: None,
        };
        m.validate().map(|_| m)
    }

    pub fn maxwell(e1: f64, eta: f64) -> Result<Self> {
        let m = Self {
            family: ModelFamily::Maxwell,
            e1,
            eta,
            e2: None,
        };
        m.validate().map(|_| m)
    }

    pub fn zener(e1: f64, eta: f64, e2: f64) -> Result<Self> {
        let m = Self {
            family: ModelFamily::Zener,
            e1,
            eta,
            e2: Some(e2),
        };
        m.validate().map(|_| m)
    }

    /// Builds a model of `family` from a parameter slice ordered `[E1, eta, E2]`.
    pub fn from_parameters(family: ModelFamily, params: &[f64]) -> Result<Self> {
        match (family, params) {
            (ModelFamily::KelvinVoigt, [e1, eta, ..]) => Self::kelvin_voigt(*e1, *eta),
            (ModelFamily::Maxwell, [e1, eta, ..]) => Self::maxwell(*e1, *eta),
            (ModelFamily::Zener, [e1, eta, e2, ..]) => Self::zener(*e1, *eta, *e2),
            _ => Err(config(format!(
                "{family} needs {} parameters, got {}",
                family.parameter_count(),
                params.len()
            ))),
        }
    }

    /// Parameters in the order used by [`ViscoelasticModel::from_parameters`].
    pub fn parameters(&self) -> Vec<f64> {
        match self.family {
            ModelFamily::Zener => vec![self.e1, self.eta, self.e2.unwrap_or(f64::NAN)],
            _ => vec![self.e1, self.eta],
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("E1", self.e1)?;
        positive("eta", self.eta)?;
        if self.family == ModelFamily::Zener {
            match self.e2 {
                Some(e2) => positive("E2", e2)?,
                None => return Err(config("Zener model requires E2")),
            }
        }
        Ok(())
    }

    /// `eta / E1` in seconds.
    pub fn time_constant(&self) -> f64 {
        self.eta / self.e1
    }

    fn zener_e2(&self) -> Result<f64> {
        self.e2
            .filter(|e2| e2.is_finite() && *e2 > 0.0)
            .ok_or_else(|| config("Zener model requires E2 > 0"))
    }

    /// Steady-state storage and loss moduli under oscillation at `omega` rad/s.
    pub fn complex_modulus(&self, omega: f64) -> Result<ComplexModulus> {
        self.validate()?;
        if !(omega.is_finite() && omega > 0.0) {
            return Err(domain(format!("omega must be finite and > 0, got {omega}")));
        }
        let (storage, loss) = match self.family {
            ModelFamily::KelvinVoigt => (self.e1, omega * self.eta),
            ModelFamily::Maxwell => maxwell_arm(self.e1, self.time_constant(), omega),
            ModelFamily::Zener => {
                let (s, l) = maxwell_arm(self.e1, self.time_constant(), omega);
                (self.zener_e2()? + s, l)
            }
        };
        Ok(ComplexModulus {
            storage,
            loss,
            omega,
        })
    }

    /// Creep compliance J(t) in 1/Pa for `t >= 0` (infinity allowed).
    pub fn creep_compliance(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if t.is_nan() || t < 0.0 {
            return Err(domain(format!("creep time must be >= 0, got {t}")));
        }
        let tau = self.time_constant();
        Ok(match self.family {
            ModelFamily::KelvinVoigt => (1.0 - (-t / tau).exp()) / self.e1,
            ModelFamily::Maxwell => 1.0 / self.e1 + t / self.eta,
            ModelFamily::Zener => {
                let e2 = self.zener_e2()?;
                let glassy = 1.0 / (self.e1 + e2);
                let rubbery = 1.0 / e2;
                // retardation time under constant stress
                let tau_creep = tau * (self.e1 + e2) / e2;
                rubbery - (rubbery - glassy) * (-t / tau_creep).exp()
            }
        })
    }

    /// Relaxation modulus G(t) in Pa for `t > 0`.
    ///
    /// Kelvin-Voigt has an impulsive dashpot contribution at `t = 0`; it is
    /// excluded and the function is only defined for strictly positive time.
    pub fn relaxation_modulus(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if t.is_nan() || t <= 0.0 {
            return Err(domain(format!("relaxation time must be > 0, got {t}")));
        }
        let decay = (-t / self.time_constant()).exp();
        Ok(match self.family {
            ModelFamily::KelvinVoigt => self.e1,
            ModelFamily::Maxwell => self.e1 * decay,
            ModelFamily::Zener => self.zener_e2()? + self.e1 * decay,
        })
    }

    /// Stress history for a uniformly sampled strain history.
    ///
    /// Kelvin-Voigt evaluates `E1*eps + eta*d(eps)/dt` with central differences
    /// in the interior and one-sided differences at both ends. Maxwell and
    /// Zener integrate the arm ODE `d(sigma)/dt + sigma/tau = E1*d(eps)/dt`
    /// step by step, exactly for piecewise-linear strain, starting from the
    /// instantaneous elastic response to the first sample.
    pub fn stress_response(&self, strain: &SampledSignal) -> Result<SampledSignal> {
        self.validate()?;
        let eps = &strain.values;
        let dt = strain.dt;
        let stress = match self.family {
            ModelFamily::KelvinVoigt => {
                let rate = central_difference(eps, dt);
                eps.iter()
                    .zip(&rate)
                    .map(|(e, r)| self.e1 * e + self.eta * r)
                    .collect()
            }
            ModelFamily::Maxwell => self.maxwell_arm_stress(eps, dt),
            ModelFamily::Zener => {
                let e2 = self.zener_e2()?;
                self.maxwell_arm_stress(eps, dt)
                    .into_iter()
                    .zip(eps)
                    .map(|(arm, e)| arm + e2 * e)
                    .collect()
            }
        };
        Ok(SampledSignal { dt, values: stress })
    }

    fn maxwell_arm_stress(&self, eps: &[f64], dt: f64) -> Vec<f64> {
        let tau = self.time_constant();
        let decay = (-dt / tau).exp();
        // tau * (1 - e^{-dt/tau}) without cancellation for dt << tau
        let gain = -tau * (-dt / tau).exp_m1();
        let mut out = Vec::with_capacity(eps.len());
        let mut sigma = self.e1 * eps[0];
        out.push(sigma);
        for w in eps.windows(2) {
            let rate = (w[1] - w[0]) / dt;
            sigma = sigma * decay + self.e1 * rate * gain;
            out.push(sigma);
        }
        out
    }
}

fn maxwell_arm(e1: f64, tau: f64, omega: f64) -> (f64, f64) {
    let wt = omega * tau;
    let denom = 1.0 + wt * wt;
    (e1 * wt * wt / denom, e1 * wt / denom)
}

impl ComplexModulus {
    pub fn new(storage: f64, loss: f64, omega: f64) -> Result<Self> {
        if !(storage.is_finite() && storage >= 0.0 && loss.is_finite() && loss >= 0.0) {
            return Err(domain(format!(
                "moduli must be finite and >= 0, got G'={storage}, G''={loss}"
            )));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(domain(format!("omega must be finite and > 0, got {omega}")));
        }
        Ok(Self {
            storage,
            loss,
            omega,
        })
    }

    /// |eta*| = sqrt(G'^2 + G''^2) / omega, in Pa*s.
    pub fn complex_viscosity(&self) -> Result<f64> {
        if !(self.omega > 0.0) {
            return Err(domain(format!(
                "complex viscosity is singular at omega = {}",
                self.omega
            )));
        }
        Ok(self.storage.hypot(self.loss) / self.omega)
    }

    /// tan(delta) = G''/G'. Returns `f64::INFINITY` when G' is zero.
    pub fn loss_factor(&self) -> f64 {
        if self.storage == 0.0 {
            f64::INFINITY
        } else {
            self.loss / self.storage
        }
    }

    /// |G*| = sqrt(G'^2 + G''^2)
    pub fn magnitude(&self) -> f64 {
        self.storage.hypot(self.loss)
    }
}

/// A uniformly sampled scalar signal starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(domain(format!("sample spacing must be > 0, got {dt}")));
        }
        if values.len() < 2 {
            return Err(domain(format!(
                "need at least 2 samples, got {}",
                values.len()
            )));
        }
        Ok(Self { dt, values })
    }

    /// Builds a signal from explicit sample times, rejecting non-uniform spacing.
    pub fn from_samples(times: &[f64], values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(domain(format!(
                "{} times for {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(domain(format!("need at least 2 samples, got {}", times.len())));
        }
        let span = times[times.len() - 1] - times[0];
        let dt = span / (times.len() - 1) as f64;
        let scale = times.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
        let tol = 1e-9 * dt.abs() + 8.0 * f64::EPSILON * scale;
        for (i, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > tol {
                return Err(domain(format!(
                    "non-uniform sampling between samples {} and {}",
                    i,
                    i + 1
                )));
            }
        }
        Self::new(dt, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }
}

/// Central differences in the interior, first-order one-sided at the ends.
pub(crate) fn central_difference(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    d[0] = (x[1] - x[0]) / dt;
    d[n - 1] = (x[n - 1] - x[n - 2]) / dt;
    for i in 1..n - 1 {
        d[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, PI};

    fn kv(e1: f64, eta: f64) -> ViscoelasticModel {
        ViscoelasticModel::kelvin_voigt(e1, eta).unwrap()
    }

    fn mx(e1: f64, eta: f64) -> ViscoelasticModel {
        ViscoelasticModel::maxwell(e1, eta).unwrap()
    }

    #[test]
    fn rejects_non_positive_parameters() {
        assert!(ViscoelasticModel::kelvin_voigt(0.0, 1.0).is_err());
        assert!(ViscoelasticModel::maxwell(1.0, -1.0).is_err());
        assert!(ViscoelasticModel::zener(1.0, 1.0, 0.0).is_err());
        let missing = ViscoelasticModel {
            family: ModelFamily::Zener,
            e1: 1.0,
            eta: 1.0,
            e2: None,
        };
        assert!(matches!(
            missing.complex_modulus(1.0),
            Err(crate::Error::Config(_))
        ));
    }

    #[test]
    fn complex_modulus_examples() {
        let cm = kv(1000.0, 10.0).complex_modulus(1.0).unwrap();
        assert_eq!((cm.storage, cm.loss), (1000.0, 10.0));

        let hi = mx(1000.0, 1000.0).complex_modulus(1e6).unwrap();
        assert_relative_eq!(hi.storage, 1000.0, max_relative = 1e-6);
        assert!(hi.loss < 1e-2);

        // crossover at omega * tau = 1
        let x = mx(1000.0, 1000.0).complex_modulus(1.0).unwrap();
        assert_relative_eq!(x.storage, 500.0, max_relative = 1e-15);
        assert_relative_eq!(x.loss, 500.0, max_relative = 1e-15);

        assert!(matches!(
            kv(1.0, 1.0).complex_modulus(0.0),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn zener_limits() {
        let z = ViscoelasticModel::zener(900.0, 9.0, 100.0).unwrap();
        let lo = z.complex_modulus(1e-6).unwrap();
        let hi = z.complex_modulus(1e9).unwrap();
        assert_relative_eq!(lo.storage, 100.0, max_relative = 1e-9);
        assert_relative_eq!(hi.storage, 1000.0, max_relative = 1e-9);
        assert_relative_eq!(z.creep_compliance(0.0).unwrap(), 1.0 / 1000.0);
        assert_relative_eq!(
            z.creep_compliance(f64::INFINITY).unwrap(),
            1.0 / 100.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(z.relaxation_modulus(1e-12).unwrap(), 1000.0, max_relative = 1e-9);
    }

    #[test]
    fn complex_viscosity_examples() {
        let cm = ComplexModulus::new(3.0, 4.0, 1.0).unwrap();
        assert_eq!(cm.complex_viscosity().unwrap(), 5.0);

        let newtonian = ComplexModulus::new(0.0, 7.0 * 2.5, 7.0).unwrap();
        assert_relative_eq!(newtonian.complex_viscosity().unwrap(), 2.5);

        let composed = kv(1000.0, 10.0).complex_modulus(100.0).unwrap();
        assert_relative_eq!(
            composed.complex_viscosity().unwrap(),
            14.142135623730951,
            max_relative = 1e-12
        );

        let singular = ComplexModulus {
            storage: 1.0,
            loss: 1.0,
            omega: 0.0,
        };
        assert!(singular.complex_viscosity().is_err());
    }

    #[test]
    fn loss_factor_examples() {
        let cm = ComplexModulus::new(1000.0, 10.0, 1.0).unwrap();
        assert_relative_eq!(cm.loss_factor(), 0.01);
        assert_relative_eq!(
            kv(1000.0, 10.0).complex_modulus(100.0).unwrap().loss_factor(),
            1.0
        );
        assert_relative_eq!(
            mx(1000.0, 1000.0).complex_modulus(1.0).unwrap().loss_factor(),
            1.0
        );
        let rubber_free = ComplexModulus::new(0.0, 5.0, 1.0).unwrap();
        assert_eq!(rubber_free.loss_factor(), f64::INFINITY);
    }

    #[test]
    fn creep_compliance_examples() {
        assert_eq!(mx(1000.0, 123.0).creep_compliance(0.0).unwrap(), 1e-3);
        assert_relative_eq!(
            kv(1000.0, 1000.0).creep_compliance(100.0).unwrap(),
            1e-3,
            max_relative = 1e-6
        );
        assert_relative_eq!(
            kv(1000.0, 1000.0).creep_compliance(1.0).unwrap(),
            6.321205588285577e-4,
            max_relative = 1e-12
        );
        assert!(kv(1.0, 1.0).creep_compliance(-1.0).is_err());
    }

    #[test]
    fn relaxation_modulus_examples() {
        assert_relative_eq!(
            mx(1000.0, 1000.0).relaxation_modulus(1.0).unwrap(),
            1000.0 / E,
            max_relative = 1e-14
        );
        assert_eq!(kv(1000.0, 10.0).relaxation_modulus(5.0).unwrap(), 1000.0);
        let m = mx(250.0, 500.0);
        assert_relative_eq!(
            m.relaxation_modulus(m.time_constant() * 2f64.ln()).unwrap(),
            125.0,
            max_relative = 1e-14
        );
        assert!(kv(1.0, 1.0).relaxation_modulus(0.0).is_err());
    }

    #[test]
    fn kelvin_voigt_equilibrium_product_is_one() {
        for e1 in [1000.0, 1e5, 2.5e4, 8.0] {
            let m = kv(e1, 3.0);
            let j = m.creep_compliance(f64::INFINITY).unwrap();
            let g = m.relaxation_modulus(1.0).unwrap();
            assert_eq!(j * g, 1.0, "E1 = {e1}");
        }
    }

    #[test]
    fn stress_response_constant_strain() {
        let m = kv(1000.0, 10.0);
        let s = m
            .stress_response(&SampledSignal::new(0.01, vec![0.02; 50]).unwrap())
            .unwrap();
        for v in &s.values[1..49] {
            assert_relative_eq!(*v, 20.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn stress_response_dashpot_limit() {
        let m = kv(1e-12, 7.0);
        let dt = 0.01;
        let ramp: Vec<f64> = (0..100).map(|i| i as f64 * dt).collect();
        let s = m.stress_response(&SampledSignal::new(dt, ramp).unwrap()).unwrap();
        for v in &s.values {
            assert_relative_eq!(*v, 7.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn stress_response_sinusoid_amplitude() {
        let m = kv(1000.0, 10.0);
        let dt = 1e-3;
        let n = (2.0 * PI / dt).round() as usize + 1;
        let strain: Vec<f64> = (0..n).map(|i| 0.01 * (i as f64 * dt).sin()).collect();
        let s = m.stress_response(&SampledSignal::new(dt, strain).unwrap()).unwrap();
        let amp = s.values[1..n - 1]
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.abs()));
        let expected = 0.01 * (1000.0_f64.powi(2) + 10.0_f64.powi(2)).sqrt();
        assert_relative_eq!(amp, expected, max_relative = 1e-3);
    }

    #[test]
    fn maxwell_step_strain_relaxes_exactly() {
        let m = mx(1000.0, 1000.0);
        let dt = 1e-3;
        let s = m
            .stress_response(&SampledSignal::new(dt, vec![0.1; 2001]).unwrap())
            .unwrap();
        for (i, v) in s.values.iter().enumerate().skip(1) {
            let closed = 0.1 * m.relaxation_modulus(i as f64 * dt).unwrap();
            assert_relative_eq!(*v, closed, max_relative = 1e-12);
        }
    }

    #[test]
    fn sampling_validation() {
        assert!(SampledSignal::new(0.1, vec![1.0]).is_err());
        assert!(SampledSignal::new(0.0, vec![1.0, 2.0]).is_err());
        let times = [0.0, 0.1, 0.2, 0.35];
        assert!(SampledSignal::from_samples(&times, vec![0.0; 4]).is_err());
        let uniform: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let s = SampledSignal::from_samples(&uniform, vec![0.0; 10]).unwrap();
        assert_relative_eq!(s.dt, 0.1, max_relative = 1e-12);
    }
}
