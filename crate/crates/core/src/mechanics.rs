//! Torsion springs, PCL shear coupling and the output-link equation of motion.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::material::{ComplexModulus, ViscoelasticModel};
use crate::thermo::MaterialTable;

/// Torsion-spring stiffness listed on the module's nominal parameter sheet, N*m/rad.
pub const DATASHEET_TORSION_STIFFNESS: f64 = 12.5;

/// Rotations beyond this are outside the small-angle regime of the
/// spring-to-link energy mapping.
pub const SMALL_ANGLE_LIMIT: f64 = 0.2;

/// Which torsion-spring stiffness feeds the link model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpringStiffnessSource {
    /// `E d^4 / (64 D n)` from the wire and coil dimensions.
    #[default]
    Formula,
    /// An explicitly stated value in N*m/rad.
    #[serde(rename = "stated_nm_per_rad")]
    Stated(f64),
}

/// Module geometry in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VimGeometry {
    /// Spring wire Young's modulus, Pa.
    pub youngs_modulus: f64,
    /// m
    pub wire_diameter: f64,
    /// Mean coil diameter, m.
    pub coil_diameter: f64,
    pub n_coils: f64,
    pub n_springs: u32,
    /// Distance of the springs from the rotor axis, m.
    pub spring_radius: f64,
    /// Output link inertia, kg*m^2.
    pub link_inertia: f64,
    /// m^2
    pub pcl_contact_area: f64,
    /// Effective radius at which the PCL is sheared, m.
    pub pcl_radius: f64,
    /// PCL layer thickness between rotor and housing, m.
    pub pcl_gap: f64,
    /// rad
    pub pretension: f64,
    /// rad
    pub max_deflection: f64,
    pub spring_stiffness: SpringStiffnessSource,
}

impl Default for VimGeometry {
    fn default() -> Self {
        Self::nominal()
    }
}

impl VimGeometry {
    /// Nominal prototype: four 210 GPa springs of 2.413 mm wire on a 24.4094 mm
    /// coil with 3.25 turns at 57 mm, 415.6 kg*mm^2 link, 1579.2 mm^2 of PCL
    /// sheared at 57 mm across a 1 mm gap, +/-0.104 rad travel.
    pub fn nominal() -> Self {
        Self {
            youngs_modulus: 210e9,
            wire_diameter: 2.413e-3,
            coil_diameter: 24.4094e-3,
            n_coils: 3.25,
            n_springs: 4,
            spring_radius: 57e-3,
            link_inertia: 415.6e-6,
            pcl_contact_area: 1579.2e-6,
            pcl_radius: 57e-3,
            pcl_gap: 1e-3,
            pretension: 0.0,
            max_deflection: 0.104,
            spring_stiffness: SpringStiffnessSource::Formula,
        }
    }

    /// Every violated constraint, empty when the geometry is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut pos = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("{name} must be finite and > 0, got {v}"));
            }
        };
        pos("youngs_modulus", self.youngs_modulus);
        pos("wire_diameter", self.wire_diameter);
        pos("coil_diameter", self.coil_diameter);
        pos("spring_radius", self.spring_radius);
        pos("link_inertia", self.link_inertia);
        pos("pcl_contact_area", self.pcl_contact_area);
        pos("pcl_radius", self.pcl_radius);
        pos("pcl_gap", self.pcl_gap);
        pos("max_deflection", self.max_deflection);
        if let SpringStiffnessSource::Stated(k) = self.spring_stiffness {
            pos("stated spring stiffness", k);
        }
        if !(self.n_coils.is_finite() && self.n_coils >= 1.0) {
            out.push(format!("n_coils must be >= 1, got {}", self.n_coils));
        }
        if self.n_springs == 0 {
            out.push("n_springs must be >= 1".to_string());
        }
        if !self.pretension.is_finite() {
            out.push("pretension must be finite".to_string());
        }
        if self.max_deflection > SMALL_ANGLE_LIMIT {
            warn!(
                "max deflection {} rad exceeds the {SMALL_ANGLE_LIMIT} rad small-angle regime",
                self.max_deflection
            );
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(config(v.join("; ")))
        }
    }

    pub fn torsion_stiffness_formula(&self) -> Result<f64> {
        torsion_spring_stiffness(
            self.youngs_modulus,
            self.wire_diameter,
            self.coil_diameter,
            self.n_coils,
        )
    }

    /// Per-spring stiffness from the configured source.
    pub fn torsion_stiffness(&self) -> Result<f64> {
        match self.spring_stiffness {
            SpringStiffnessSource::Formula => self.torsion_stiffness_formula(),
            SpringStiffnessSource::Stated(k) if k > 0.0 => Ok(k),
            SpringStiffnessSource::Stated(k) => {
                Err(config(format!("stated spring stiffness must be > 0, got {k}")))
            }
        }
    }

    /// K_s at the output link.
    pub fn spring_stiffness_total(&self) -> Result<f64> {
        Ok(output_link_spring_stiffness(
            self.torsion_stiffness()?,
            self.n_springs,
        ))
    }

    /// `A r_p^2 / h`: joint torque per unit shear stress-to-strain ratio, m^3.
    pub fn shear_factor(&self) -> Result<f64> {
        if !(self.pcl_gap > 0.0) {
            return Err(domain(format!("PCL gap must be > 0, got {}", self.pcl_gap)));
        }
        Ok(self.pcl_contact_area * self.pcl_radius * self.pcl_radius / self.pcl_gap)
    }
}

/// Torsion spring rate `E d^4 / (64 D n)` in N*m/rad.
pub fn torsion_spring_stiffness(
    youngs_modulus: f64,
    wire_diameter: f64,
    coil_diameter: f64,
    n_coils: f64,
) -> Result<f64> {
    for (name, v) in [
        ("E", youngs_modulus),
        ("d", wire_diameter),
        ("D", coil_diameter),
        ("n", n_coils),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(domain(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    Ok(youngs_modulus * wire_diameter.powi(4) / (64.0 * coil_diameter * n_coils))
}

/// Torque of a single pretensioned torsion spring.
pub fn torsion_torque(k: f64, theta: f64, theta_pretension: f64) -> f64 {
    if theta.abs() > SMALL_ANGLE_LIMIT {
        warn!("|theta| = {} rad is outside the small-angle regime", theta.abs());
    }
    k * (theta - theta_pretension)
}

/// Link stiffness from equating the energy stored in `n_springs` springs
/// (each deflected by the rotor angle) to `K_s theta^2 / 2`.
pub fn output_link_spring_stiffness(k_torsion: f64, n_springs: u32) -> f64 {
    // spring deflection equals rotor angle, so (alpha/theta)^2 = 1
    let ratio = 1.0;
    f64::from(n_springs) * k_torsion * ratio
}

/// Joint-level stiffness and damping contributed by the sheared PCL layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PclCoupling {
    /// N*m/rad
    pub stiffness: f64,
    /// N*m*s/rad
    pub damping: f64,
}

/// Maps the PCL moduli at one frequency onto the rotor joint.
///
/// A rotor angle `theta` shears the layer by `r_p theta / h`, and the shear
/// stress acts on area `A` at arm `r_p`, so `k = G' A r_p^2 / h` and
/// `b = (G''/omega) A r_p^2 / h`.
pub fn pcl_shear_coupling(cm: &ComplexModulus, geom: &VimGeometry) -> Result<PclCoupling> {
    if !(cm.omega > 0.0) {
        return Err(domain(format!("omega must be > 0, got {}", cm.omega)));
    }
    let factor = geom.shear_factor()?;
    Ok(PclCoupling {
        stiffness: cm.storage * factor,
        damping: cm.loss / cm.omega * factor,
    })
}

/// Lumped impedance of the output link at one operating temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceState {
    /// K_s, N*m/rad
    pub k_spring_total: f64,
    /// N*m/rad
    pub k_pcl: f64,
    /// N*m*s/rad
    pub b_pcl: f64,
    pub temperature_c: f64,
}

impl ImpedanceState {
    pub fn new(k_spring_total: f64, k_pcl: f64, b_pcl: f64, temperature_c: f64) -> Result<Self> {
        if !(k_spring_total.is_finite() && k_spring_total > 0.0) {
            return Err(config(format!("K_s must be > 0, got {k_spring_total}")));
        }
        if !(k_pcl.is_finite() && k_pcl >= 0.0 && b_pcl.is_finite() && b_pcl >= 0.0) {
            return Err(config(format!(
                "PCL stiffness and damping must be >= 0, got {k_pcl} and {b_pcl}"
            )));
        }
        Ok(Self {
            k_spring_total,
            k_pcl,
            b_pcl,
            temperature_c,
        })
    }

    pub fn total_stiffness(&self) -> f64 {
        self.k_spring_total + self.k_pcl
    }

    /// Undamped natural frequency in rad/s.
    pub fn natural_frequency(&self, inertia: f64) -> f64 {
        (self.total_stiffness() / inertia).sqrt()
    }

    pub fn damping_ratio(&self, inertia: f64) -> f64 {
        self.b_pcl / (2.0 * (self.total_stiffness() * inertia).sqrt())
    }

    /// Impedance at `temperature_c` from the table, see [`ImpedanceState::from_model`].
    pub fn at_temperature(
        geom: &VimGeometry,
        table: &MaterialTable,
        temperature_c: f64,
    ) -> Result<(Self, f64)> {
        Self::from_model(geom, &table.params_at_temperature(temperature_c), temperature_c)
    }

    /// Linearises the PCL at its own undamped natural frequency.
    ///
    /// Starting from the springs-only frequency, the moduli are re-evaluated
    /// at `sqrt((K_s + k_pcl) / I)` until the frequency changes by less than
    /// 1e-6 relative, for at most 20 iterations. Returns the state and the
    /// frequency the moduli were sampled at.
    pub fn from_model(
        geom: &VimGeometry,
        model: &ViscoelasticModel,
        temperature_c: f64,
    ) -> Result<(Self, f64)> {
        geom.validate()?;
        let k_s = geom.spring_stiffness_total()?;
        let mut omega = (k_s / geom.link_inertia).sqrt();
        let mut coupling = pcl_shear_coupling(&model.complex_modulus(omega)?, geom)?;
        for _ in 0..20 {
            let next = ((k_s + coupling.stiffness) / geom.link_inertia).sqrt();
            let converged = ((next - omega) / omega).abs() < 1e-6;
            omega = next;
            coupling = pcl_shear_coupling(&model.complex_modulus(omega)?, geom)?;
            if converged {
                break;
            }
        }
        let state = Self::new(k_s, coupling.stiffness, coupling.damping, temperature_c)?;
        Ok((state, omega))
    }
}

/// Closed-form release-from-rest response `theta(t)` of
/// `I theta'' + b theta' + K theta = 0` with `theta(0) = theta0`.
pub fn free_response(stiffness: f64, damping: f64, inertia: f64, theta0: f64, t: f64) -> f64 {
    let wn = (stiffness / inertia).sqrt();
    let zeta = damping / (2.0 * (stiffness * inertia).sqrt());
    if (zeta - 1.0).abs() < 1e-9 {
        return theta0 * (-wn * t).exp() * (1.0 + wn * t);
    }
    if zeta < 1.0 {
        let wd = wn * (1.0 - zeta * zeta).sqrt();
        let decay = (-zeta * wn * t).exp();
        decay * theta0 * ((wd * t).cos() + zeta * wn / wd * (wd * t).sin())
    } else {
        let root = (zeta * zeta - 1.0).sqrt();
        let (r1, r2) = (-wn * (zeta - root), -wn * (zeta + root));
        theta0 * (r2 * (r1 * t).exp() - r1 * (r2 * t).exp()) / (r2 - r1)
    }
}

/// Output-link angular acceleration for `I theta'' + b theta' + K theta = T_ext`.
pub fn eom_accel(theta: f64, theta_dot: f64, imp: &ImpedanceState, t_ext: f64, inertia: f64) -> f64 {
    (t_ext - imp.b_pcl * theta_dot - imp.total_stiffness() * theta) / inertia
}
