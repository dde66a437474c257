//! Generate-then-fit fixtures: closed-form datasets and reproducible noise.

use super::dataset::{DatasetKind, RheologyDataset};
use crate::error::{domain, Result};
use crate::material::ViscoelasticModel;

/// Numerical Recipes linear congruential generator:
/// `x <- (1664525 x + 1013904223) mod 2^32`.
#[derive(Debug, Clone)]
pub struct Lcg(u32);

impl Lcg {
    pub fn new(seed: u32) -> Self {
        Self(seed)
    }

    pub fn next_u32(&mut self) -> u32 {
        self.0 = self.0.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
        self.0
    }

    /// Uniform on [0, 1).
    pub fn next_unit(&mut self) -> f64 {
        f64::from(self.next_u32()) / 4_294_967_296.0
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive (`[lo]` when `n == 1`).
pub fn log_points(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite() && n > 0) {
        return Err(domain(format!("need 0 < lo <= hi and n > 0, got {lo}, {hi}, {n}")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect())
}

pub fn synthetic_sweep(
    model: &ViscoelasticModel,
    omega_lo: f64,
    omega_hi: f64,
    n: usize,
    temperature_c: f64,
) -> Result<RheologyDataset> {
    let x = log_points(omega_lo, omega_hi, n)?;
    let cms = x
        .iter()
        .map(|w| model.complex_modulus(*w))
        .collect::<Result<Vec<_>>>()?;
    RheologyDataset::new(
        DatasetKind::FrequencySweep,
        x,
        vec![
            cms.iter().map(|c| c.storage).collect(),
            cms.iter().map(|c| c.loss).collect(),
        ],
        temperature_c,
    )
}

pub fn synthetic_creep(
    model: &ViscoelasticModel,
    t_lo: f64,
    t_hi: f64,
    n: usize,
    temperature_c: f64,
) -> Result<RheologyDataset> {
    let x = log_points(t_lo, t_hi, n)?;
    let j = x
        .iter()
        .map(|t| model.creep_compliance(*t))
        .collect::<Result<_>>()?;
    RheologyDataset::new(DatasetKind::Creep, x, vec![j], temperature_c)
}

/// Stress after an instantaneous step to `strain`.
pub fn synthetic_relaxation(
    model: &ViscoelasticModel,
    strain: f64,
    t_lo: f64,
    t_hi: f64,
    n: usize,
    temperature_c: f64,
) -> Result<RheologyDataset> {
    let x = log_points(t_lo, t_hi, n)?;
    let s = x
        .iter()
        .map(|t| model.relaxation_modulus(*t).map(|g| g * strain))
        .collect::<Result<_>>()?;
    RheologyDataset::new(DatasetKind::StressRelaxation, x, vec![s], temperature_c)?
        .with_relaxation_strain(strain)
}

/// Multiplies every observation by `1 + level * u`, `u` uniform on [-1, 1),
/// drawing channel by channel from an [`Lcg`] seeded with `seed`.
pub fn with_noise(mut data: RheologyDataset, level: f64, seed: u32) -> Result<RheologyDataset> {
    if !(0.0..1.0).contains(&level) {
        return Err(domain(format!("noise level must be in [0, 1), got {level}")));
    }
    let mut rng = Lcg::new(seed);
    for ch in &mut data.y {
        for v in ch.iter_mut() {
            *v *= 1.0 + level * (2.0 * rng.next_unit() - 1.0);
        }
    }
    data.validate()?;
    Ok(data)
}
