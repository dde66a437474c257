//! Modelling and identification toolkit for a thermo-active variable
//! impedance module: a rotor held by torsion springs and sheared against a
//! layer of polycaprolactone (PCL) whose viscoelastic moduli are tuned by
//! Peltier heating.
//!
//! * [`material`]: Kelvin-Voigt, Maxwell and Zener constitutive laws.
//! * [`thermo`]: temperature-dependent parameter tables and lumped heating.
//! * [`mechanics`]: spring and PCL stiffness at the output link, equation of motion.
//! * [`sim`]: RK4 integration, perturbation tests, virtual rheometer.
//! * [`fitting`]: least-squares recovery of model parameters from data.

pub mod error;
pub mod fitting;
pub mod material;
pub mod mechanics;
pub mod sim;
pub mod thermo;

pub use error::{Error, Result};
pub use material::{ComplexModulus, ModelFamily, SampledSignal, ViscoelasticModel};
pub use mechanics::{ImpedanceState, PclCoupling, SpringStiffnessSource, VimGeometry};
pub use sim::{Channel, SimTrace};
pub use thermo::{HeatingMode, Interpolation, MaterialTable, ThermalCalibration, ThermalModel};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
