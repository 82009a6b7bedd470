use serde::Serialize;

use super::scf::StationaryState;
use super::sigma::occupation_sum;
use crate::casimir::Casimir;
use crate::ensemble::{density_on, EnsembleState};
use crate::error::Result;
use crate::functionals::{energy_casimir, DualProblem};
use crate::model::Alpha;
use crate::torus::{symbol_table, Fft3};

/// Relative deviation from `f(mu_k + sigma)` beyond which an occupation is flagged.
pub const OCCUPATION_FLAG: f64 = 1e-10;

/// Residuals of the stationary equations.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StationaryResiduals {
    /// `max_k ||H u_k - mu_k u_k||` over the occupied eigenfunctions.
    pub max_eigen_residual: f64,
    /// Upper bound on `||H||`.
    pub hamiltonian_norm: f64,
    /// `||V_0 - rho_0^alpha||_inf`, with `rho_0` recomputed from the fields.
    pub potential_residual: f64,
    /// `|sum_k lambda_k - Lambda|` over the stored occupations.
    pub occupation_sum_residual: f64,
    /// `|sum_k f(mu_k + sigma) + tail - Lambda|` over all computed levels.
    pub constraint_residual: f64,
    pub max_occupation_residual: f64,
    pub flagged_occupations: Vec<usize>,
    /// `|Phi(V_0, sigma_0) - H_f(u_0, lambda_0)|`.
    pub duality_gap: f64,
}

/// Rechecks a stationary state through code paths independent of the solver.
pub fn verify_stationary(st: &StationaryState, cf: &dyn Casimir, alpha: Alpha) -> Result<StationaryResiduals> {
    let lattice = st.lattice;
    let fft = Fft3::new(st.potential.size());
    let symbols = symbol_table(lattice, &st.geometry, st.convention);
    let v = st.potential.values();
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let hamiltonian_norm = symbols.iter().fold(0.0f64, |m, s| m.max(*s)) + vmax;

    let mut max_eigen_residual = 0.0f64;
    for (u, mu) in st.fields.iter().zip(&st.energies) {
        let mut grid = fft.synthesize(u)?;
        for (g, p) in grid.iter_mut().zip(v) {
            *g *= *p;
        }
        let vu = fft.analyze(grid, lattice)?;
        let r: f64 = u
            .coeffs()
            .iter()
            .zip(vu.coeffs())
            .zip(&symbols)
            .map(|((c, w), s)| (c * (s - mu) + w).norm_sqr())
            .sum();
        max_eigen_residual = max_eigen_residual.max(r.sqrt());
    }

    let state = EnsembleState::unchecked(
        lattice,
        st.fields.clone(),
        st.occupations.clone(),
        st.geometry,
        st.convention,
    )?;
    let rho = density_on(&state, &fft)?;
    let potential_residual = rho
        .values()
        .iter()
        .zip(v)
        .fold(0.0f64, |m, (r, p)| m.max((alpha.pow(*r) - p).abs()));

    let occupation_sum_residual = (st.occupations.iter().sum::<f64>() - st.lambda_total).abs();
    let constraint_residual = (occupation_sum(&st.energies, &st.tail, cf, st.sigma) - st.lambda_total).abs();

    let mut max_occupation_residual = 0.0f64;
    let mut flagged_occupations = Vec::new();
    for (k, (l, mu)) in st.occupations.iter().zip(&st.energies).enumerate() {
        let f = cf.f(mu + st.sigma);
        let d = (l - f).abs();
        max_occupation_residual = max_occupation_residual.max(d);
        if d > OCCUPATION_FLAG * f {
            flagged_occupations.push(k);
        }
    }

    let problem = DualProblem {
        cf,
        lambda_total: st.lambda_total,
        alpha,
        n: lattice.n(),
        geometry: st.geometry,
        convention: st.convention,
        tail: st.tail,
    };
    let phi = problem.phi_from_spectrum(&st.potential, &st.energies, st.sigma)?;
    let duality_gap = (phi - energy_casimir(&state, cf, alpha)?).abs();

    Ok(StationaryResiduals {
        max_eigen_residual,
        hamiltonian_norm,
        potential_residual,
        occupation_sum_residual,
        constraint_residual,
        max_occupation_residual,
        flagged_occupations,
        duality_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casimir::CasimirFunction;
    use crate::ensemble::density;
    use crate::functionals::{PotentialField, TailModel};
    use crate::stationary::{scf_solve, ScfConfig};
    use crate::torus::{padded_size, Convention, FrequencyLattice, SpectralField, TorusGeometry};

    /// Plane waves under `V = Lambda`, with the closed-form Boltzmann shift.
    fn synthetic(n: usize) -> StationaryState {
        let lattice = FrequencyLattice::new(n).unwrap();
        let geometry = TorusGeometry::irrational();
        let conv = Convention::Standard;
        let lam = 1.0;
        let cf = CasimirFunction::boltzmann(1.0).unwrap();
        let sym = symbol_table(lattice, &geometry, conv);
        let mut order: Vec<usize> = (0..lattice.len()).collect();
        order.sort_by(|a, b| sym[*a].total_cmp(&sym[*b]).then(a.cmp(b)));
        let energies: Vec<f64> = order.iter().map(|&i| sym[i] + lam).collect();
        let z: f64 = energies.iter().map(|m| (-m).exp()).sum();
        let sigma = (z / lam).ln();
        let keep = energies.iter().take_while(|m| (-(*m + sigma)).exp() >= 1e-12).count();
        let fields: Vec<SpectralField> = order[..keep]
            .iter()
            .map(|&i| SpectralField::plane_wave(lattice, lattice.point(i)).unwrap())
            .collect();
        let occupations: Vec<f64> = energies[..keep].iter().map(|m| (-(m + sigma)).exp()).collect();
        let g = padded_size(lattice, 2);
        let state = EnsembleState::new(lattice, fields.clone(), occupations.clone(), geometry, conv).unwrap();
        let tail = TailModel::none(lattice.len());
        let potential = PotentialField::constant(g, lam).unwrap();
        let problem = DualProblem {
            cf: &cf,
            lambda_total: lam,
            alpha: Alpha::Cubic,
            n,
            geometry,
            convention: conv,
            tail,
        };
        let phi = problem.phi_from_spectrum(&potential, &energies, sigma).unwrap();
        StationaryState {
            lattice,
            geometry,
            convention: conv,
            alpha: Alpha::Cubic,
            lambda_total: lam,
            casimir: cf,
            fields,
            occupations,
            energies,
            density: density(&state, 2).unwrap(),
            potential,
            sigma,
            phi,
            tail,
            trace: Vec::new(),
            residuals: StationaryResiduals::default(),
        }
    }

    #[test]
    fn exact_synthetic_state_has_tiny_residuals() {
        let st = synthetic(3);
        let r = verify_stationary(&st, &st.casimir, st.alpha).unwrap();
        assert!(r.max_eigen_residual < 1e-10);
        assert!(r.potential_residual < 1e-10);
        assert!(r.occupation_sum_residual < 1e-10);
        assert!(r.constraint_residual < 1e-10);
        assert!(r.max_occupation_residual < 1e-10);
        assert!(r.flagged_occupations.is_empty());
        assert!(r.duality_gap < 1e-10, "{}", r.duality_gap);
    }

    #[test]
    fn corrupted_occupation_is_flagged() {
        let mut c = ScfConfig::new(
            TorusGeometry::square(),
            Convention::Standard,
            CasimirFunction::shifted_power(3.0, 1.0).unwrap(),
            Alpha::Cubic,
            1.0,
            2,
        );
        c.tol_v = 1e-11;
        let mut st = scf_solve(&c).unwrap();
        assert!(st.residuals.flagged_occupations.is_empty());
        let l4 = st.occupations[4];
        st.occupations[4] *= 2.0;
        let r = verify_stationary(&st, &st.casimir, st.alpha).unwrap();
        assert_eq!(r.flagged_occupations, vec![4]);
        assert!((r.max_occupation_residual - l4).abs() < 1e-12);
        assert!(r.potential_residual > 0.5 * l4);
    }
}
