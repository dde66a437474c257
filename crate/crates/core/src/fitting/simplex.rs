//! Nelder-Mead downhill simplex.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Initial edge length along each coordinate.
    pub step: f64,
    /// Converged when every vertex lies within this distance (max-norm) of the best.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            step: 0.5,
            tolerance: 1e-8,
            max_iterations: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimises `f` from `x0`. Non-finite function values are treated as +inf.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: &SimplexOptions) -> Result<SimplexOutcome> {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut verts: Vec<Vec<f64>> = std::iter::once(x0.to_vec())
        .chain((0..n).map(|i| {
            let mut v = x0.to_vec();
            v[i] += opts.step;
            v
        }))
        .collect();
    let mut vals: Vec<f64> = verts.iter().map(|v| eval(v)).collect();
    if vals.iter().all(|v| v.is_infinite()) {
        return Err(Error::Divergence);
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        verts = order.iter().map(|&i| verts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let diameter = verts[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&verts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| verts[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |s: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&verts[n])
                .map(|(c, w)| c + s * (c - w))
                .collect()
        };

        let reflected = along(REFLECT);
        let fr = eval(&reflected);
        if fr < vals[0] {
            let expanded = along(EXPAND);
            let fe = eval(&expanded);
            if fe < fr {
                verts[n] = expanded;
                vals[n] = fe;
            } else {
                verts[n] = reflected;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            verts[n] = reflected;
            vals[n] = fr;
            continue;
        }
        // outside contraction if the reflection beat the worst vertex, inside otherwise
        let (candidate, threshold) = if fr < vals[n] {
            (along(REFLECT * CONTRACT), fr)
        } else {
            (along(-CONTRACT), vals[n])
        };
        let fc = eval(&candidate);
        if fc < threshold {
            verts[n] = candidate;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = verts[i]
                .iter()
                .zip(&verts[0])
                .map(|(v, b)| b + SHRINK * (v - b))
                .collect();
            vals[i] = eval(&shrunk);
            verts[i] = shrunk;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    Ok(SimplexOutcome {
        x: verts[best].clone(),
        value: vals[best],
        iterations,
        converged,
    })
}
