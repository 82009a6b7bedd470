use num_complex::Complex64;

use super::field::SpectralField;
use super::geometry::{Convention, TorusGeometry};
use super::lattice::FrequencyLattice;
use crate::error::{Error, Result};

/// Laplacian symbol for every lattice point, in lattice order.
pub fn symbol_table(lattice: FrequencyLattice, geometry: &TorusGeometry, convention: Convention) -> Vec<f64> {
    lattice
        .points()
        .map(|xi| geometry.laplacian_symbol(xi, convention))
        .collect()
}

/// `e^{it Delta}`: multiply each coefficient by `exp(-i t symbol(xi))`.
pub fn free_propagate(
    field: &SpectralField,
    t: f64,
    geometry: &TorusGeometry,
    convention: Convention,
) -> SpectralField {
    let symbols = symbol_table(field.lattice(), geometry, convention);
    let mut out = field.clone();
    apply_free_phase(out.coeffs_mut(), &symbols, t);
    out
}

pub(crate) fn apply_free_phase(coeffs: &mut [Complex64], symbols: &[f64], t: f64) {
    for (c, &s) in coeffs.iter_mut().zip(symbols) {
        *c *= Complex64::from_polar(1.0, -t * s);
    }
}

/// Smooth even cutoff with `phi = 1` on `[-1, 1]` and `phi = 0` for `|x| >= 2`.
///
/// On `1 < |x| < 2` it is `g(2 - |x|) / (g(2 - |x|) + g(|x| - 1))` with
/// `g(t) = exp(-1/t)` for `t > 0`, which is `C^infinity` and monotone.
pub fn bump(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let g = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
        let up = g(2.0 - a);
        up / (up + g(a - 1.0))
    }
}

/// Axis-aligned integer cube `lo <= xi <= hi` (inclusive, componentwise).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntCube {
    pub lo: [i64; 3],
    pub hi: [i64; 3],
}

impl IntCube {
    pub fn contains(&self, xi: [i64; 3]) -> bool {
        (0..3).all(|i| self.lo[i] <= xi[i] && xi[i] <= self.hi[i])
    }
}

/// Frequency projection kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// `P_{<=N}`: multiplier `prod_i phi(xi_i / N)`.
    Leq,
    /// `P_N = P_{<=N} - P_{<=N/2}` for `N >= 2`, and `P_1 = P_{<=1}`, so that
    /// `P_1 + sum_{1<M<=N} P_M = P_{<=N}`.
    Shell,
    /// Sharp projection onto the lattice points of a cube.
    Cube(IntCube),
}

pub(crate) fn is_dyadic(n: u64) -> bool {
    n >= 1 && n.is_power_of_two()
}

/// Multiplier of `kind` at dyadic scale `n` for frequency `xi`.
pub fn projection_multiplier(xi: [i64; 3], n: u64, kind: Projection) -> f64 {
    let leq = |scale: f64| xi.iter().map(|&x| bump(x as f64 / scale)).product::<f64>();
    match kind {
        Projection::Leq => leq(n as f64),
        Projection::Shell if n == 1 => leq(1.0),
        Projection::Shell => leq(n as f64) - leq(n as f64 / 2.0),
        Projection::Cube(c) => {
            if c.contains(xi) {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Littlewood-Paley style projection at dyadic scale `n`.
pub fn lp_project(field: &SpectralField, n: u64, kind: Projection) -> Result<SpectralField> {
    if !is_dyadic(n) {
        return Err(Error::invalid("n", format!("{n} is not a power of two")));
    }
    let lat = field.lattice();
    let mut out = field.clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        let m = projection_multiplier(lat.point(i), n, kind);
        if m == 0.0 {
            *c = Complex64::new(0.0, 0.0);
        } else if m != 1.0 {
            *c *= m;
        }
    }
    Ok(out)
}

/// `(sum_xi (1 + |xi|^2)^s |c(xi)|^2)^{1/2}` with the isotropic bracket.
pub fn sobolev_norm(field: &SpectralField, s: f64) -> f64 {
    sobolev_norm_sqr(field, s).sqrt()
}

pub fn sobolev_norm_sqr(field: &SpectralField, s: f64) -> f64 {
    let lat = field.lattice();
    if s == 0.0 {
        return field.norm_sqr();
    }
    field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xi = lat.point(i);
            let k2 = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]) as f64;
            (1.0 + k2).powf(s) * c.norm_sqr()
        })
        .sum()
}
