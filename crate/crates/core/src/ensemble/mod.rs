//! Ensemble states `(u, lambda)`: orthonormal fields with occupations.

mod manifest;
mod observables;
mod perturb;
mod state;

pub use manifest::{load_ensemble, save_ensemble, EnsembleManifest};
pub(crate) use observables::{accumulate_density, density_on, energy_from_density};
pub use observables::{
    density, energy, energy_with_padding, hs_lambda_norm, kinetic_energy, mass, potential_integral, DensityField,
};
pub use perturb::{lowdin, perturb, random_ensemble, MIN_GRAM_EIGENVALUE};
pub use state::{EnsembleState, GramMatrix, GRAM_TOLERANCE};
