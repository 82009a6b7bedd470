//! Energy-Casimir functional, its dual and the truncated trace of `F(-Delta + V)`.

mod potential;
mod trace;

pub use potential::{PotentialField, NEGATIVE_SLACK};
pub use trace::{free_spectrum, li_yau_constant, trace_from_spectrum, TailModel, TraceTail};

use crate::casimir::Casimir;
use crate::ensemble::{density, density_on, energy, kinetic_energy, potential_integral, EnsembleState};
use crate::error::{Error, Result};
use crate::model::{Alpha, Coupling};
use crate::stationary::{build_hamiltonian, eigenvalues};
use crate::torus::{Convention, Fft3, TorusGeometry};

fn sum_f_star(state: &EnsembleState, cf: &dyn Casimir) -> Result<f64> {
    state
        .occupations()
        .iter()
        .map(|&l| if l == 0.0 { Ok(0.0) } else { cf.f_star(-l) })
        .sum()
}

/// `Psi_f = sum_k [F*(-lambda_k) + lambda_k int (|grad u_k|^2 + V |u_k|^2)]`,
/// with `int V |u|^2` on the potential's grid.
pub fn psi_f(state: &EnsembleState, cf: &dyn Casimir, v: &PotentialField) -> Result<f64> {
    if v.size() < state.lattice().width() {
        return Err(Error::SizeMismatch("potential grid is coarser than the lattice".into()));
    }
    let rho = density_on(state, &Fft3::new(v.size()))?;
    let coupling: f64 =
        rho.values().iter().zip(v.values()).map(|(r, p)| r * p).sum::<f64>() / rho.values().len() as f64;
    Ok(sum_f_star(state, cf)? + 2.0 * kinetic_energy(state) + coupling)
}

/// `H_f = sum_k F*(-lambda_k) + 2 E(u)` for the defocusing system.
pub fn energy_casimir(state: &EnsembleState, cf: &dyn Casimir, alpha: Alpha) -> Result<f64> {
    Ok(sum_f_star(state, cf)? + 2.0 * energy(state, alpha, Coupling::Defocusing)?)
}

/// `H_f` through `Psi_f(u, lambda, rho^alpha) - alpha/(alpha+1) int rho^{alpha+1}`.
pub fn energy_casimir_via_psi(state: &EnsembleState, cf: &dyn Casimir, alpha: Alpha) -> Result<f64> {
    let rho = density(state, alpha.default_padding())?;
    let v = PotentialField::new(rho.grid().map(|r| alpha.pow(r)))?;
    let a = alpha.as_f64();
    Ok(psi_f(state, cf, &v)? - a / (a + 1.0) * potential_integral(&rho, alpha))
}

/// `rho^alpha` of a state on its alias-free grid.
pub fn density_potential(state: &EnsembleState, alpha: Alpha) -> Result<PotentialField> {
    let rho = density(state, alpha.default_padding())?;
    PotentialField::new(rho.grid().map(|r| alpha.pow(r)))
}

/// `G = Psi_f - alpha/(alpha+1) int V^{(alpha+1)/alpha} + sigma (sum lambda - Lambda)`.
pub fn g_functional(
    state: &EnsembleState,
    cf: &dyn Casimir,
    v: &PotentialField,
    sigma: f64,
    lambda_total: f64,
    alpha: Alpha,
) -> Result<f64> {
    let a = alpha.as_f64();
    Ok(psi_f(state, cf, v)? - a / (a + 1.0) * v.integral_pow((a + 1.0) / a)
        + sigma * (state.total_occupation() - lambda_total))
}

/// Setting shared by trace and dual evaluations: the Galerkin lattice, the
/// number of computed eigenvalues and the tail model beyond them.
#[derive(Debug, Clone)]
pub struct DualProblem<'a> {
    pub cf: &'a dyn Casimir,
    pub lambda_total: f64,
    pub alpha: Alpha,
    pub n: usize,
    pub geometry: TorusGeometry,
    pub convention: Convention,
    pub tail: TailModel,
}

/// Default truncation: the full basis for `N <= 8`, else 2000.
pub fn default_k_max(n: usize) -> usize {
    let d = (2 * n + 1).pow(3);
    if n <= 8 {
        d
    } else {
        d.min(2000)
    }
}

impl<'a> DualProblem<'a> {
    pub fn new(
        cf: &'a dyn Casimir,
        lambda_total: f64,
        alpha: Alpha,
        n: usize,
        k_max: usize,
        geometry: TorusGeometry,
        convention: Convention,
    ) -> Result<Self> {
        let d = (2 * n + 1).pow(3);
        if k_max == 0 || k_max > d {
            return Err(Error::invalid("k_max", format!("{k_max} is outside 1..={d}")));
        }
        Ok(Self {
            cf,
            lambda_total,
            alpha,
            n,
            geometry,
            convention,
            tail: TailModel::calibrate(&geometry, convention, k_max),
        })
    }

    pub fn k_max(&self) -> usize {
        self.tail.k_max
    }

    pub fn spectrum(&self, v: &PotentialField) -> Result<Vec<f64>> {
        let h = build_hamiltonian(v, self.n, &self.geometry, self.convention)?;
        eigenvalues(&h, self.k_max())
    }

    /// `Tr F(-Delta + V + sigma)` over the computed eigenvalues, with the tail
    /// bound reported separately.
    pub fn trace(&self, v: &PotentialField, sigma: f64) -> Result<(f64, TraceTail)> {
        trace_from_spectrum(&self.spectrum(v)?, sigma, self.cf, &self.tail)
    }

    /// `Phi(V, sigma) = -alpha/(alpha+1) int V^{(alpha+1)/alpha} - Tr F(-Delta+V+sigma) - sigma Lambda`,
    /// the trace including its tail.
    pub fn phi(&self, v: &PotentialField, sigma: f64) -> Result<f64> {
        self.phi_from_spectrum(v, &self.spectrum(v)?, sigma)
    }

    pub fn phi_from_spectrum(&self, v: &PotentialField, mu: &[f64], sigma: f64) -> Result<f64> {
        if let Some(&bad) = v.values().iter().find(|x| **x < -NEGATIVE_SLACK) {
            return Err(Error::OutOfDomain {
                what: "potential value",
                value: bad,
            });
        }
        let a = self.alpha.as_f64();
        let (tr, tail) = trace_from_spectrum(mu, sigma, self.cf, &self.tail)?;
        Ok(-a / (a + 1.0) * v.integral_pow((a + 1.0) / a) - tr - tail.tail_bound - sigma * self.lambda_total)
    }
}

/// `Tr F(-Delta + V + sigma)` truncated at `k_max`, with the tail bound.
#[allow(clippy::too_many_arguments)]
pub fn trace_f(
    v: &PotentialField,
    sigma: f64,
    cf: &dyn Casimir,
    k_max: usize,
    n: usize,
    geometry: &TorusGeometry,
    convention: Convention,
) -> Result<(f64, TraceTail)> {
    DualProblem::new(cf, 1.0, Alpha::Cubic, n, k_max, *geometry, convention)?.trace(v, sigma)
}
