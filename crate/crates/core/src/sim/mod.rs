//! Fixed-step simulation of the module, identification of its impedance and
//! the virtual rheometer protocols.

mod dynamics;
mod identify;
mod perturbation;
pub mod rheometer;
mod thermal;
mod trace;

pub use dynamics::{integrate, mechanical_energy, rk4_step, step_limit, STEPS_PER_PERIOD};
pub use identify::{
    damping_from_samples, extract_damping, extract_damping_ratio, extract_stiffness, settle_time,
    stiffness_from_samples, DampingEstimate,
};
pub use perturbation::{perturbation_test, PerturbationResult, PerturbationSummary, SETTLE_BAND};
pub use rheometer::{
    virtual_amplitude_sweep, virtual_creep_test, virtual_frequency_sweep,
    virtual_stress_relaxation, AmplitudeRow, FrequencySweep, LinearityLimit, SweepRow,
};
pub use thermal::thermal_transient;
pub use trace::{format_sig9, round_sig9, Channel, SimTrace};
