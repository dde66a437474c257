//! Least-squares identification of viscoelastic parameters from rheometer
//! and perturbation data.

mod dataset;
mod fit;
mod residuals;
pub mod simplex;
pub mod synthetic;

pub use dataset::{load_rheology_csv, DatasetKind, RheologyDataset};
pub use fit::{fit_material_table, fit_material_table_detailed, fit_model, FitResult};
pub use residuals::{predict, residuals};
