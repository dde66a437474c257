use approx::assert_relative_eq;
use vimsim_core::fitting::synthetic::{synthetic_creep, synthetic_relaxation, synthetic_sweep, with_noise};
use vimsim_core::fitting::{fit_model, residuals, RheologyDataset};
use vimsim_core::{ModelFamily, ViscoelasticModel};

/// Fixture noise seed; the generator is `x <- 1664525 x + 1013904223 mod 2^32`.
const SEED: u32 = 20_240_917;

fn grid() -> impl Iterator<Item = (f64, f64)> {
    [1e3, 1e5, 1e7]
        .into_iter()
        .flat_map(|e1| [10.0, 1e3, 1e5].into_iter().map(move |eta| (e1, eta)))
}

fn model(family: ModelFamily, e1: f64, eta: f64) -> ViscoelasticModel {
    let params = [e1, eta, e1 / 10.0];
    ViscoelasticModel::from_parameters(family, &params[..family.parameter_count()]).unwrap()
}

/// Two decades either side of the characteristic rate.
fn sweep(m: &ViscoelasticModel) -> RheologyDataset {
    let w = 1.0 / m.time_constant();
    synthetic_sweep(m, w / 100.0, w * 100.0, 30, 30.0).unwrap()
}

const FAMILIES: [ModelFamily; 3] = [ModelFamily::KelvinVoigt, ModelFamily::Maxwell, ModelFamily::Zener];

#[test]
fn noiseless_grid_within_one_percent() {
    for family in FAMILIES {
        for (e1, eta) in grid() {
            let truth = model(family, e1, eta);
            let fit = fit_model(&sweep(&truth), family, None).unwrap();
            assert!(fit.converged, "{family} {e1} {eta}: {:?}", fit.warnings);
            for (got, want) in fit.model.parameters().iter().zip(truth.parameters()) {
                assert_relative_eq!(*got, want, max_relative = 0.01);
            }
        }
    }
}

#[test]
fn noisy_grid_within_five_percent() {
    for family in FAMILIES {
        for (e1, eta) in grid() {
            let truth = model(family, e1, eta);
            let ds = with_noise(sweep(&truth), 0.02, SEED).unwrap();
            let fit = fit_model(&ds, family, None).unwrap();
            assert_relative_eq!(fit.model.e1, e1, max_relative = 0.05);
            assert_relative_eq!(fit.model.eta, eta, max_relative = 0.05);
        }
    }
}

#[test]
fn seeded_fits_are_bit_reproducible() {
    let truth = model(ModelFamily::Zener, 1e5, 1e3);
    let run = || fit_model(&with_noise(sweep(&truth), 0.02, SEED).unwrap(), ModelFamily::Zener, None).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert_eq!(a.model.e1.to_bits(), b.model.e1.to_bits());
}

#[test]
fn generator_residuals_vanish() {
    for family in FAMILIES {
        for (e1, eta) in grid() {
            let m = model(family, e1, eta);
            let r = residuals(&m, &sweep(&m)).unwrap();
            assert!(r.iter().all(|v| v.abs() < 1e-12));
        }
    }
}

#[test]
fn creep_and_relaxation_recover_parameters() {
    let maxwell = model(ModelFamily::Maxwell, 1e4, 1e3);
    let tau = maxwell.time_constant();
    let creep = synthetic_creep(&maxwell, tau / 100.0, tau * 100.0, 30, 60.0).unwrap();
    let fit = fit_model(&creep, ModelFamily::Maxwell, None).unwrap();
    assert_relative_eq!(fit.model.e1, 1e4, max_relative = 0.01);
    assert_relative_eq!(fit.model.eta, 1e3, max_relative = 0.01);

    let relax = synthetic_relaxation(&maxwell, 0.1, tau / 100.0, tau * 5.0, 30, 60.0).unwrap();
    let fit = fit_model(&relax, ModelFamily::Maxwell, None).unwrap();
    assert_relative_eq!(fit.model.e1, 1e4, max_relative = 0.01);
    assert_relative_eq!(fit.model.eta, 1e3, max_relative = 0.01);

    let kv = model(ModelFamily::KelvinVoigt, 1e5, 1e4);
    let tau = kv.time_constant();
    let creep = synthetic_creep(&kv, tau / 100.0, tau * 10.0, 30, 30.0).unwrap();
    let fit = fit_model(&creep, ModelFamily::KelvinVoigt, None).unwrap();
    assert_relative_eq!(fit.model.e1, 1e5, max_relative = 0.01);
    assert_relative_eq!(fit.model.eta, 1e4, max_relative = 0.01);
}
