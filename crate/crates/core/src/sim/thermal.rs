use super::dynamics::step_count;
use super::trace::{Channel, SimTrace};
use crate::error::Result;
use crate::thermo::ThermalModel;

/// Temperature history at constant drive current, sampled every `dt`.
pub fn thermal_transient(
    model: &ThermalModel,
    start_c: f64,
    current_a: f64,
    dt: f64,
    duration: f64,
) -> Result<SimTrace> {
    let steps = step_count(dt, duration)?;
    let mut temps = Vec::with_capacity(steps + 1);
    let mut t = start_c;
    temps.push(t);
    for _ in 0..steps {
        t = model.step(t, current_a, dt)?;
        temps.push(t);
    }
    Ok(SimTrace::new(dt, vec![(Channel::Temperature, temps)])?
        .with_metadata("protocol", "thermal"))
}
