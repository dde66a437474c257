use super::dataset::{DatasetKind, RheologyDataset};
use crate::error::{Error, Result};
use crate::material::{ModelFamily, ViscoelasticModel};
use crate::mechanics::{free_response, ImpedanceState};

/// Model predictions for every channel of `data`.
pub fn predict(model: &ViscoelasticModel, data: &RheologyDataset) -> Result<Vec<Vec<f64>>> {
    check_compatible(model.family, data)?;
    match data.kind {
        DatasetKind::FrequencySweep => {
            let cms = data
                .x
                .iter()
                .map(|w| model.complex_modulus(*w))
                .collect::<Result<Vec<_>>>()?;
            Ok(vec![
                cms.iter().map(|c| c.storage).collect(),
                cms.iter().map(|c| c.loss).collect(),
            ])
        }
        DatasetKind::Creep => Ok(vec![data
            .x
            .iter()
            .map(|t| model.creep_compliance(*t))
            .collect::<Result<_>>()?]),
        DatasetKind::StressRelaxation => Ok(vec![data
            .x
            .iter()
            .map(|t| model.relaxation_modulus(*t).map(|g| g * data.relaxation_strain))
            .collect::<Result<_>>()?]),
        DatasetKind::Perturbation => {
            let geom = data.geometry.as_ref().expect("checked by check_compatible");
            let (imp, _) = ImpedanceState::from_model(geom, model, data.temperature_c)?;
            let theta0 = data.y[0][0];
            let t0 = data.x[0];
            Ok(vec![data
                .x
                .iter()
                .map(|t| {
                    free_response(imp.total_stiffness(), imp.b_pcl, geom.link_inertia, theta0, t - t0)
                })
                .collect()])
        }
    }
}

pub(crate) fn check_compatible(family: ModelFamily, data: &RheologyDataset) -> Result<()> {
    let incompatible = |reason: &str| {
        Err(Error::IncompatibleKind {
            family: family.to_string(),
            kind: data.kind.to_string(),
            reason: reason.to_string(),
        })
    };
    match (family, data.kind) {
        (ModelFamily::KelvinVoigt, DatasetKind::StressRelaxation) => {
            incompatible("its relaxation modulus is constant, so the viscosity is unidentifiable")
        }
        (_, DatasetKind::Perturbation) if data.geometry.is_none() => {
            incompatible("perturbation data needs the module geometry")
        }
        _ => Ok(()),
    }
}

/// Residual vector, channels concatenated.
///
/// Moduli, compliances and stresses use `log10(pred) - log10(obs)`;
/// perturbation angles use `pred - obs`. Weighted datasets scale each
/// residual by `sqrt(weight)`. Predictions that are not strictly positive
/// yield non-finite log residuals.
pub fn residuals(model: &ViscoelasticModel, data: &RheologyDataset) -> Result<Vec<f64>> {
    let log_space = data.kind != DatasetKind::Perturbation;
    if log_space {
        let n = data.len();
        let bad: Vec<usize> = data
            .y
            .iter()
            .enumerate()
            .flat_map(|(c, ch)| {
                ch.iter()
                    .enumerate()
                    .filter(|(_, v)| !(**v > 0.0))
                    .map(move |(i, _)| c * n + i)
            })
            .collect();
        if !bad.is_empty() {
            return Err(Error::NonPositiveObservation { indices: bad });
        }
    }
    let pred = predict(model, data)?;
    let mut out = Vec::with_capacity(data.len() * data.y.len());
    for (p_ch, o_ch) in pred.iter().zip(&data.y) {
        for (i, (p, o)) in p_ch.iter().zip(o_ch).enumerate() {
            let r = if log_space { p.log10() - o.log10() } else { p - o };
            let w = data.weights.as_ref().map_or(1.0, |w| w[i].sqrt());
            out.push(r * w);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanics::VimGeometry;

    fn kv_sweep(model: &ViscoelasticModel) -> RheologyDataset {
        let x: Vec<f64> = (0..8).map(|i| 0.1 * 3f64.powi(i)).collect();
        let cms: Vec<_> = x.iter().map(|w| model.complex_modulus(*w).unwrap()).collect();
        RheologyDataset::new(
            DatasetKind::FrequencySweep,
            x,
            vec![
                cms.iter().map(|c| c.storage).collect(),
                cms.iter().map(|c| c.loss).collect(),
            ],
            30.0,
        )
        .unwrap()
    }

    #[test]
    fn generator_gives_zero_residuals() {
        let m = ViscoelasticModel::kelvin_voigt(1e5, 500.0).unwrap();
        let ds = kv_sweep(&m);
        let r = residuals(&m, &ds).unwrap();
        assert_eq!(r.len(), 2 * ds.len());
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn tenfold_prediction_gives_unit_residuals() {
        let m = ViscoelasticModel::kelvin_voigt(1e5, 500.0).unwrap();
        let ds = kv_sweep(&m);
        let high = ViscoelasticModel::kelvin_voigt(1e6, 5000.0).unwrap();
        for v in residuals(&high, &ds).unwrap() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_positive_observations_are_indexed() {
        let ds = RheologyDataset::new(
            DatasetKind::Creep,
            vec![0.0, 1.0, 2.0],
            vec![vec![0.0, 1e-3, -1.0]],
            30.0,
        )
        .unwrap();
        let m = ViscoelasticModel::kelvin_voigt(1e3, 1e3).unwrap();
        match residuals(&m, &ds) {
            Err(Error::NonPositiveObservation { indices }) => assert_eq!(indices, vec![0, 2]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn incompatible_pairs() {
        let relax = RheologyDataset::new(
            DatasetKind::StressRelaxation,
            vec![1.0, 2.0],
            vec![vec![5.0, 4.0]],
            30.0,
        )
        .unwrap();
        let kv = ViscoelasticModel::kelvin_voigt(1e3, 1e3).unwrap();
        assert!(matches!(residuals(&kv, &relax), Err(Error::IncompatibleKind { .. })));

        let pert = RheologyDataset::new(
            DatasetKind::Perturbation,
            vec![0.0, 1e-3],
            vec![vec![0.1, 0.09]],
            30.0,
        )
        .unwrap();
        assert!(matches!(residuals(&kv, &pert), Err(Error::IncompatibleKind { .. })));
        let with_geom = pert.with_geometry(VimGeometry::nominal());
        assert_eq!(residuals(&kv, &with_geom).unwrap().len(), 2);
    }
}
