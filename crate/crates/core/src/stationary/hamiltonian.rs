use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::PotentialField;
use crate::torus::{symbol_table, Convention, Fft3, FrequencyLattice, SpectralField, TorusGeometry};

/// Galerkin matrix of `-Delta + V` on the lattice `[-N, N]^3`.
///
/// Stored as the diagonal symbols plus the potential coefficients
/// `V_hat(k)` for `k` in `[-2N, 2N]^3`, so that
/// `H[xi, xi'] = symbol(xi) delta + V_hat(xi - xi')`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianRep {
    lattice: FrequencyLattice,
    diag: Vec<f64>,
    vhat_lattice: FrequencyLattice,
    vhat: Vec<Complex64>,
    potential_grid: usize,
}

/// Assembles `-Delta + V`. The potential grid must have at least `4N + 1`
/// points per side so that every difference `xi - xi'` is resolved.
pub fn build_hamiltonian(
    v: &PotentialField,
    n: usize,
    geometry: &TorusGeometry,
    convention: Convention,
) -> Result<HamiltonianRep> {
    let lattice = FrequencyLattice::new(n)?;
    let vhat_lattice = FrequencyLattice::new(2 * n)?;
    let g = v.size();
    if g < vhat_lattice.width() {
        return Err(Error::SizeMismatch(format!(
            "potential grid {g} is too coarse for N={n} (needs at least {})",
            vhat_lattice.width()
        )));
    }
    let raw = Fft3::new(g).analyze_real(v.grid(), vhat_lattice)?;
    // V is real, so V_hat(-k) = conj V_hat(k); enforce it exactly.
    let vhat = (0..raw.len())
        .map(|i| 0.5 * (raw[i] + raw[vhat_lattice.mirror(i)].conj()))
        .collect();
    Ok(HamiltonianRep {
        lattice,
        diag: symbol_table(lattice, geometry, convention),
        vhat_lattice,
        vhat,
        potential_grid: g,
    })
}

impl HamiltonianRep {
    pub fn lattice(&self) -> FrequencyLattice {
        self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.len()
    }

    /// Laplacian symbols in lattice order.
    pub fn symbols(&self) -> &[f64] {
        &self.diag
    }

    pub fn potential_grid(&self) -> usize {
        self.potential_grid
    }

    /// `V_hat(k)` for `k` in `[-2N, 2N]^3`.
    pub fn vhat(&self, k: [i64; 3]) -> Complex64 {
        self.vhat_lattice
            .index_of(k)
            .map(|i| self.vhat[i])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn vhat_values(&self) -> &[Complex64] {
        &self.vhat
    }

    pub(crate) fn vhat_lattice(&self) -> FrequencyLattice {
        self.vhat_lattice
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let (a, b) = (self.lattice.point(i), self.lattice.point(j));
        let mut z = self.vhat([a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
        if i == j {
            z += self.diag[i];
        }
        z
    }

    /// `H u` by direct summation over the stored coefficients.
    pub fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        if u.lattice() != self.lattice {
            return Err(Error::SizeMismatch(
                "field lattice does not match the Hamiltonian".into(),
            ));
        }
        let lat = self.lattice;
        let n = lat.n() as i64;
        let w = lat.width() as i64;
        let vw = self.vhat_lattice.width() as i64;
        let c = u.coeffs();
        let mut out = vec![Complex64::new(0.0, 0.0); lat.len()];
        for (i, o) in out.iter_mut().enumerate() {
            let a = lat.point(i);
            let mut acc = c[i] * self.diag[i];
            for (j, cj) in c.iter().enumerate() {
                if cj.re == 0.0 && cj.im == 0.0 {
                    continue;
                }
                let jj = j as i64;
                let b = [jj / (w * w) - n, (jj / w) % w - n, jj % w - n];
                let k = [a[0] - b[0] + 2 * n, a[1] - b[1] + 2 * n, a[2] - b[2] + 2 * n];
                acc += self.vhat[((k[0] * vw + k[1]) * vw + k[2]) as usize] * cj;
            }
            *o = acc;
        }
        SpectralField::from_coeffs(lat, out)
    }

    /// `max |H - H^*|` over all entry pairs.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Frobenius-type scale `max |diag| + sum |V_hat|`, an upper bound on `||H||`.
    pub fn norm_bound(&self) -> f64 {
        self.diag.iter().fold(0.0, |m: f64, v| m.max(v.abs())) + self.vhat.iter().map(|z| z.norm()).sum::<f64>()
    }
}
