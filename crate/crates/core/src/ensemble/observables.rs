use num_complex::Complex64;
use rayon::prelude::*;

use super::state::EnsembleState;
use crate::error::{Error, Result};
use crate::model::{Alpha, Coupling};
use crate::torus::{padded_size, sobolev_norm_sqr, symbol_table, Fft3, RealGrid};

/// Fields synthesized concurrently per batch; the sum over a batch is
/// taken sequentially so results do not depend on the thread count.
const BATCH: usize = 8;

/// Particle density `rho = sum_j lambda_j |u_j|^2` on a collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: RealGrid,
}

impl DensityField {
    pub fn from_grid(grid: RealGrid) -> Result<Self> {
        if let Some(v) = grid.values().iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::OutOfDomain {
                what: "density value",
                value: *v,
            });
        }
        Ok(Self { grid })
    }

    pub fn grid(&self) -> &RealGrid {
        &self.grid
    }

    pub fn into_grid(self) -> RealGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        self.grid.values()
    }

    pub fn size(&self) -> usize {
        self.grid.size()
    }

    /// `int rho dx` over the unit coordinate cube.
    pub fn integral(&self) -> f64 {
        self.grid.integral()
    }
}

/// Density on a grid of linear size `padding_ratio * (2N + 1)`.
pub fn density(state: &EnsembleState, padding_ratio: usize) -> Result<DensityField> {
    if padding_ratio == 0 {
        return Err(Error::invalid("padding_ratio", "must be at least 1"));
    }
    let fft = Fft3::new(padded_size(state.lattice(), padding_ratio));
    density_on(state, &fft)
}

pub(crate) fn density_on(state: &EnsembleState, fft: &Fft3) -> Result<DensityField> {
    let mut rho = vec![0.0; fft.len()];
    accumulate_density(state, fft, &mut rho)?;
    Ok(DensityField {
        grid: RealGrid::new(fft.size(), rho)?,
    })
}

/// Adds `sum_j lambda_j |u_j|^2` into `rho`, skipping empty occupations.
pub(crate) fn accumulate_density(state: &EnsembleState, fft: &Fft3, rho: &mut [f64]) -> Result<()> {
    let lat = state.lattice();
    let members: Vec<(usize, f64)> = state
        .occupations()
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, l)| *l > 0.0)
        .collect();
    for batch in members.chunks(BATCH) {
        let grids: Vec<Vec<Complex64>> = batch
            .par_iter()
            .map(|&(j, _)| {
                let mut g = Vec::new();
                fft.synthesize_into(lat, state.fields()[j].coeffs(), &mut g)?;
                Ok(g)
            })
            .collect::<Result<_>>()?;
        for (&(_, l), g) in batch.iter().zip(&grids) {
            for (r, z) in rho.iter_mut().zip(g) {
                *r += l * z.norm_sqr();
            }
        }
    }
    Ok(())
}

/// `M = sum_j lambda_j ||u_j||^2`.
pub fn mass(state: &EnsembleState) -> f64 {
    state
        .fields()
        .iter()
        .zip(state.occupations())
        .map(|(f, l)| l * f.norm_sqr())
        .sum()
}

/// `1/2 sum_j lambda_j ||grad u_j||^2` with gradient weights from the symbol.
pub fn kinetic_energy(state: &EnsembleState) -> f64 {
    let symbols = symbol_table(state.lattice(), state.geometry(), state.convention());
    0.5 * state
        .fields()
        .iter()
        .zip(state.occupations())
        .map(|(f, l)| {
            l * f
                .coeffs()
                .iter()
                .zip(&symbols)
                .map(|(c, s)| s * c.norm_sqr())
                .sum::<f64>()
        })
        .sum::<f64>()
}

/// `int rho^{alpha+1} dx`.
pub fn potential_integral(rho: &DensityField, alpha: Alpha) -> f64 {
    rho.grid().integral_pow(alpha.as_f64() + 1.0)
}

/// `E = 1/2 sum lambda ||grad u||^2 + sign/(2(alpha+1)) int rho^{alpha+1}`, with
/// the density on the alias-free grid for `alpha`.
pub fn energy(state: &EnsembleState, alpha: Alpha, coupling: Coupling) -> Result<f64> {
    energy_with_padding(state, alpha, coupling, alpha.default_padding())
}

pub fn energy_with_padding(
    state: &EnsembleState,
    alpha: Alpha,
    coupling: Coupling,
    padding_ratio: usize,
) -> Result<f64> {
    let rho = density(state, padding_ratio)?;
    Ok(energy_from_density(state, &rho, alpha, coupling))
}

pub(crate) fn energy_from_density(state: &EnsembleState, rho: &DensityField, alpha: Alpha, coupling: Coupling) -> f64 {
    let a = alpha.as_f64();
    kinetic_energy(state) + coupling.sign() / (2.0 * (a + 1.0)) * potential_integral(rho, alpha)
}

/// `(sum_j lambda_j ||u_j||_{H^s}^2)^{1/2}`.
pub fn hs_lambda_norm(state: &EnsembleState, s: f64) -> f64 {
    state
        .fields()
        .iter()
        .zip(state.occupations())
        .map(|(f, l)| l * sobolev_norm_sqr(f, s))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::ensemble::random_ensemble;
    use crate::torus::{Convention, FrequencyLattice, TorusGeometry};

    fn lat(n: usize) -> FrequencyLattice {
        FrequencyLattice::new(n).unwrap()
    }

    fn constant_state(l: f64) -> EnsembleState {
        EnsembleState::plane_waves(
            lat(2),
            &[[0, 0, 0]],
            vec![l],
            TorusGeometry::square(),
            Convention::Standard,
        )
        .unwrap()
    }

    #[test]
    fn density_examples() {
        let rho = density(&constant_state(0.7), 2).unwrap();
        assert!(rho.values().iter().all(|v| (v - 0.7).abs() < 1e-15));
        let two = EnsembleState::plane_waves(
            lat(2),
            &[[1, 0, 0], [0, 2, -1]],
            vec![0.5, 0.5],
            TorusGeometry::square(),
            Convention::Standard,
        )
        .unwrap();
        let rho = density(&two, 1).unwrap();
        assert!(rho.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(density(&two, 0).is_err());
    }

    #[test]
    fn random_pair_integrates_to_occupation() {
        let s = random_ensemble(
            lat(3),
            &[0.3, 0.45],
            2,
            TorusGeometry::irrational(),
            Convention::Standard,
            11,
        )
        .unwrap();
        for ratio in [1, 2, 3] {
            let rho = density(&s, ratio).unwrap();
            assert!((rho.integral() - 0.75).abs() < 1e-12);
            assert!((rho.integral() - mass(&s)).abs() < 1e-12);
            assert!(rho.values().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn mass_examples() {
        let s = EnsembleState::plane_waves(
            lat(1),
            &[[0, 0, 0], [1, 1, 0]],
            vec![0.5, 0.25],
            TorusGeometry::square(),
            Convention::Standard,
        )
        .unwrap();
        assert_eq!(mass(&s), 0.75);
        let empty = EnsembleState::new(lat(1), vec![], vec![], TorusGeometry::square(), Convention::Standard).unwrap();
        assert_eq!(mass(&empty), 0.0);
    }

    #[test]
    fn energy_examples() {
        let s = constant_state(1.0);
        let e1 = energy(&s, Alpha::Cubic, Coupling::Defocusing).unwrap();
        assert!((e1 - 0.25).abs() < 1e-15);
        let e2 = energy(&s, Alpha::Quintic, Coupling::Defocusing).unwrap();
        assert!((e2 - 1.0 / 6.0).abs() < 1e-15);
        let f = energy(&s, Alpha::Cubic, Coupling::Focusing).unwrap();
        assert!((f + 0.25).abs() < 1e-15);

        let wave = EnsembleState::plane_waves(
            lat(2),
            &[[1, 0, 0]],
            vec![1.0],
            TorusGeometry::square(),
            Convention::Standard,
        )
        .unwrap();
        let e = energy(&wave, Alpha::Cubic, Coupling::Defocusing).unwrap();
        assert!((e - (2.0 * PI * PI + 0.25)).abs() < 1e-12);
        // coefficient-space cross-check of the kinetic part
        let c = wave.fields()[0].coeff([1, 0, 0]).unwrap();
        assert!((kinetic_energy(&wave) - 0.5 * 4.0 * PI * PI * c.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn potential_integral_is_exact_on_padded_grid() {
        // int rho^2 = sum_k |rho_hat(k)|^2, computed from coefficient convolutions.
        let l = lat(1);
        let s = random_ensemble(l, &[0.6, 0.4], 1, TorusGeometry::square(), Convention::Standard, 2).unwrap();
        let mut rho_hat = std::collections::HashMap::<[i64; 3], Complex64>::new();
        for (f, w) in s.fields().iter().zip(s.occupations()) {
            for (i, a) in f.coeffs().iter().enumerate() {
                for (j, b) in f.coeffs().iter().enumerate() {
                    let (x, y) = (l.point(i), l.point(j));
                    *rho_hat.entry([x[0] - y[0], x[1] - y[1], x[2] - y[2]]).or_default() += w * a * b.conj();
                }
            }
        }
        let direct: f64 = rho_hat.values().map(|z| z.norm_sqr()).sum();
        let rho = density(&s, 2).unwrap();
        assert!((potential_integral(&rho, Alpha::Cubic) - direct).abs() < 1e-13);
    }

    #[test]
    fn hs_norm_examples() {
        let s = random_ensemble(lat(2), &[0.2, 0.7], 2, TorusGeometry::square(), Convention::Standard, 5).unwrap();
        assert!((hs_lambda_norm(&s, 0.0) - mass(&s).sqrt()).abs() < 1e-14);
        let c = constant_state(1.0);
        for sv in [0.0, 1.0, 2.5] {
            assert!((hs_lambda_norm(&c, sv) - 1.0).abs() < 1e-15);
        }
        let mut prev = 0.0;
        for k in 0..8 {
            let v = hs_lambda_norm(&s, k as f64 * 0.5);
            assert!(v >= prev);
            prev = v;
        }
    }
}
