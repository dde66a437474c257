use std::f64::consts::LN_10;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{DatasetKind, RheologyDataset};
use super::residuals::{check_compatible, residuals};
use super::simplex::{nelder_mead, SimplexOptions};
use crate::error::{Error, Result};
use crate::material::{ModelFamily, ViscoelasticModel};
use crate::thermo::{Interpolation, MaterialTable, TableEntry};

/// Decades scanned either side of the initial guess before the simplex starts.
const SCAN_DECADES: i32 = 2;
/// Finite-difference step (decades) for the curvature diagonal.
const CURVATURE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ViscoelasticModel,
    /// Euclidean norm of the residual vector at the optimum.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Second derivative of the objective with respect to each log10
    /// parameter, ordered `[E1, eta, E2]`.
    pub per_parameter_sensitivity: Vec<f64>,
    pub dataset_digest: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Fits `family` to `data` by minimising half the squared residual norm over
/// log10 parameters with a Nelder-Mead simplex.
///
/// Without `init`, E1 starts at the median observed modulus and eta at
/// `E1 / omega_mid` (geometric centre of the abscissa range); Zener E2 starts
/// at the smallest storage modulus. A coarse decade scan around the start
/// picks the best seed, then the simplex runs once and restarts once from its
/// own optimum. Converges when the simplex spans less than 1e-8 relative in
/// every parameter.
pub fn fit_model(
    data: &RheologyDataset,
    family: ModelFamily,
    init: Option<&ViscoelasticModel>,
) -> Result<FitResult> {
    data.validate()?;
    check_compatible(family, data)?;
    let start = match init {
        Some(m) if m.family == family => {
            m.validate()?;
            m.parameters()
        }
        Some(m) => {
            return Err(crate::error::config(format!(
                "initial model is {} but the fit family is {family}",
                m.family
            )))
        }
        None => default_init(data, family),
    };
    // surfaces observation errors before any search
    residuals(&ViscoelasticModel::from_parameters(family, &start)?, data)?;

    let objective = |p: &[f64]| -> f64 {
        let params: Vec<f64> = p.iter().map(|v| 10f64.powf(*v)).collect();
        ViscoelasticModel::from_parameters(family, &params)
            .and_then(|m| residuals(&m, data))
            .map(|r| 0.5 * r.iter().map(|v| v * v).sum::<f64>())
            .unwrap_or(f64::INFINITY)
    };

    let log_start: Vec<f64> = start.iter().map(|v| v.log10()).collect();
    let seed = coarse_scan(&objective, &log_start);
    let opts = SimplexOptions {
        tolerance: 1e-8 / LN_10,
        ..SimplexOptions::default()
    };
    let first = nelder_mead(&objective, &seed, &opts)?;
    let restart = nelder_mead(
        &objective,
        &first.x,
        &SimplexOptions {
            step: 0.05,
            max_iterations: opts.max_iterations.saturating_sub(first.iterations).max(1),
            ..opts
        },
    )?;
    let best = if restart.value <= first.value { &restart } else { &first };

    let params: Vec<f64> = best.x.iter().map(|v| 10f64.powf(*v)).collect();
    let model = ViscoelasticModel::from_parameters(family, &params)?;
    let r = residuals(&model, data)?;
    let residual_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut warnings = Vec::new();
    let mut converged = first.converged && restart.converged;
    if data.len() < family.parameter_count() {
        warnings.push(format!(
            "underdetermined: {} point(s) for {} parameters",
            data.len(),
            family.parameter_count()
        ));
        converged = false;
    }
    if !converged && warnings.is_empty() {
        warnings.push(format!(
            "simplex did not converge within {} iterations",
            opts.max_iterations
        ));
    }

    Ok(FitResult {
        per_parameter_sensitivity: curvature_diagonal(&objective, &best.x),
        model,
        residual_norm,
        iterations: first.iterations + restart.iterations,
        converged,
        dataset_digest: data.digest(),
        warnings,
    })
}

fn default_init(data: &RheologyDataset, family: ModelFamily) -> Vec<f64> {
    let positive_x: Vec<f64> = data.x.iter().copied().filter(|v| *v > 0.0).collect();
    let (lo, hi) = match (positive_x.first(), positive_x.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => (1.0, 1.0),
    };
    let centre = (lo * hi).sqrt();
    let (e1, omega_mid, e2) = match data.kind {
        DatasetKind::FrequencySweep => {
            let moduli: Vec<f64> = data.y[0].iter().zip(&data.y[1]).map(|(a, b)| a.hypot(*b)).collect();
            let floor = data.y[0].iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
            (median(moduli), centre, floor)
        }
        DatasetKind::Creep => {
            let e = median(data.y[0].iter().map(|j| 1.0 / j).collect());
            (e, 1.0 / centre, e / 10.0)
        }
        DatasetKind::StressRelaxation => {
            let e = median(data.y[0].iter().map(|s| s / data.relaxation_strain).collect());
            let floor = data.y[0].iter().fold(f64::INFINITY, |m, s| m.min(*s)) / data.relaxation_strain;
            (e, 1.0 / centre, floor)
        }
        // A soft layer under the springs: let the decade scan place it.
        DatasetKind::Perturbation => (1e4, 1e3 / centre.max(1e-12), 1e3),
    };
    let sane = |v: f64, fallback: f64| if v.is_finite() && v > 0.0 { v } else { fallback };
    let e1 = sane(e1, 1.0);
    let eta = sane(e1 / omega_mid, 1.0);
    match family {
        ModelFamily::Zener => vec![e1, eta, sane(e2, e1 / 10.0)],
        _ => vec![e1, eta],
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Best point on an integer-decade lattice around `centre`; the centre wins ties.
fn coarse_scan(f: &impl Fn(&[f64]) -> f64, centre: &[f64]) -> Vec<f64> {
    let span = (2 * SCAN_DECADES + 1) as usize;
    let total = span.pow(centre.len() as u32);
    let mut best = centre.to_vec();
    let mut best_val = f(centre);
    for idx in 0..total {
        let mut rem = idx;
        let p: Vec<f64> = centre
            .iter()
            .map(|c| {
                let k = (rem % span) as i32 - SCAN_DECADES;
                rem /= span;
                c + k as f64
            })
            .collect();
        let v = f(&p);
        if v < best_val {
            best_val = v;
            best = p;
        }
    }
    best
}

fn curvature_diagonal(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let f0 = f(x);
    (0..x.len())
        .map(|i| {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[i] += CURVATURE_STEP;
            minus[i] -= CURVATURE_STEP;
            (f(&plus) - 2.0 * f0 + f(&minus)) / (CURVATURE_STEP * CURVATURE_STEP)
        })
        .collect()
}

/// Fits every dataset independently (in parallel) and assembles a
/// log-linear table sorted by temperature, together with the per-temperature
/// fit results in the same order.
pub fn fit_material_table_detailed(
    datasets: &[RheologyDataset],
    family: ModelFamily,
) -> Result<(MaterialTable, Vec<FitResult>)> {
    if datasets.len() < 2 {
        return Err(Error::TooFewDatasets(datasets.len()));
    }
    let mut order: Vec<usize> = (0..datasets.len()).collect();
    order.sort_by(|&a, &b| datasets[a].temperature_c.total_cmp(&datasets[b].temperature_c));
    for w in order.windows(2) {
        let t = datasets[w[1]].temperature_c;
        if t == datasets[w[0]].temperature_c {
            return Err(Error::DuplicateTemperature(t));
        }
    }
    let fits: Vec<FitResult> = order
        .par_iter()
        .map(|&i| {
            let ds = &datasets[i];
            fit_model(ds, family, None).map_err(|e| Error::FitFailed {
                temperature_c: ds.temperature_c,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let entries = order
        .iter()
        .zip(&fits)
        .map(|(&i, f)| TableEntry {
            temp_c: datasets[i].temperature_c,
            model: f.model,
        })
        .collect();
    Ok((MaterialTable::new(entries, Interpolation::LogLinear)?, fits))
}

/// Like [`fit_material_table_detailed`], returning only the table.
pub fn fit_material_table(datasets: &[RheologyDataset], family: ModelFamily) -> Result<MaterialTable> {
    fit_material_table_detailed(datasets, family).map(|(t, _)| t)
}
