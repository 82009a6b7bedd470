//! Empirical space-time norm ratios for the free flow.
//!
//! Norms over `[0, 1] x T^3` use uniform time nodes with trapezoidal weights.
//! Spatial integrals are grid averages; for even integer exponents the grid is
//! large enough that they are exact.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::fft::{padded_size, smooth_size, Fft3};
use super::field::SpectralField;
use super::geometry::{Convention, TorusGeometry};
use super::lattice::FrequencyLattice;
use super::operators::{apply_free_phase, is_dyadic, lp_project, symbol_table, Projection};
use crate::error::{Error, Result};

pub const DEFAULT_TIME_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CertificateMode {
    Linear,
    /// Pairs data at scale `N` with data at scale `n2`.
    Bilinear {
        n2: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateStats {
    pub mode: CertificateMode,
    pub n: usize,
    pub p: f64,
    pub samples: usize,
    pub time_nodes: usize,
    pub max: f64,
    pub mean: f64,
    pub min: f64,
    pub ratios: Vec<f64>,
}

fn trapezoid(nodes: usize) -> Vec<(f64, f64)> {
    let h = 1.0 / (nodes - 1) as f64;
    (0..nodes)
        .map(|k| {
            let w = if k == 0 || k == nodes - 1 { h / 2.0 } else { h };
            (k as f64 * h, w)
        })
        .collect()
}

/// `||e^{it Delta} f||_{L^p_{t,x}}` with `f` given on its own lattice.
pub fn spacetime_norm(
    field: &SpectralField,
    p: f64,
    geometry: &TorusGeometry,
    convention: Convention,
    time_nodes: usize,
) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid("p", format!("{p} is not a valid exponent")));
    }
    if time_nodes < 2 {
        return Err(Error::invalid("time_nodes", "need at least two nodes"));
    }
    let lat = field.lattice();
    let size = if p.fract() == 0.0 && p % 2.0 == 0.0 && p <= 32.0 {
        lat.width().max((p as usize / 2) * 2 * lat.n() + 1)
    } else {
        padded_size(lat, 2)
    };
    let fft = Fft3::new(size);
    let symbols = symbol_table(lat, geometry, convention);
    let mut coeffs = field.coeffs().to_vec();
    let mut grid = Vec::new();
    let half = p / 2.0;
    let int_half = (half.fract() == 0.0 && half <= 16.0).then_some(half as i32);
    let mut total = 0.0;
    for (t, w) in trapezoid(time_nodes) {
        coeffs.copy_from_slice(field.coeffs());
        apply_free_phase(&mut coeffs, &symbols, t);
        fft.synthesize_into(lat, &coeffs, &mut grid)?;
        let sum: f64 = match int_half {
            Some(k) => grid.iter().map(|z| z.norm_sqr().powi(k)).sum(),
            None => grid.iter().map(|z| z.norm_sqr().powf(half)).sum(),
        };
        let avg = sum / grid.len() as f64;
        total += w * avg;
    }
    Ok(total.powf(1.0 / p))
}

/// `||e^{it Delta} P_{<=N} f||_{L^p_{t,x}} / (N^{3/2 - 5/p} ||f||_2)` where
/// `N` is the lattice bound of `f`.
pub fn linear_ratio(
    field: &SpectralField,
    p: f64,
    geometry: &TorusGeometry,
    convention: Convention,
    time_nodes: usize,
) -> Result<f64> {
    if !(p > 10.0 / 3.0 && p.is_finite()) {
        return Err(Error::invalid("p", format!("{p} must exceed 10/3")));
    }
    let n = field.lattice().n() as u64;
    let norm = field.l2_norm();
    if norm == 0.0 {
        return Err(Error::invalid("field", "data must be nonzero"));
    }
    let projected = lp_project(field, n, Projection::Leq)?;
    let st = spacetime_norm(&projected, p, geometry, convention, time_nodes)?;
    Ok(st / ((n as f64).powf(1.5 - 5.0 / p) * norm))
}

/// `||e^{it Delta}u1 e^{it Delta}u2||_{L^2_{t,x}} / (min(N1,N2)^{1/2} ||u1|| ||u2||)`.
pub fn bilinear_ratio(
    u1: &SpectralField,
    u2: &SpectralField,
    geometry: &TorusGeometry,
    convention: Convention,
    time_nodes: usize,
) -> Result<f64> {
    if time_nodes < 2 {
        return Err(Error::invalid("time_nodes", "need at least two nodes"));
    }
    let (n1, n2) = (u1.lattice().n(), u2.lattice().n());
    let norms = u1.l2_norm() * u2.l2_norm();
    if norms == 0.0 {
        return Err(Error::invalid("field", "data must be nonzero"));
    }
    let lat = FrequencyLattice::new(n1.max(n2))?;
    let (a, b) = (u1.resized(lat), u2.resized(lat));
    let fft = Fft3::new(smooth_size(lat.width().max(2 * (n1 + n2) + 1)));
    let symbols = symbol_table(lat, geometry, convention);
    let (mut ca, mut cb) = (a.coeffs().to_vec(), b.coeffs().to_vec());
    let (mut ga, mut gb) = (Vec::new(), Vec::new());
    let mut total = 0.0;
    for (t, w) in trapezoid(time_nodes) {
        ca.copy_from_slice(a.coeffs());
        cb.copy_from_slice(b.coeffs());
        apply_free_phase(&mut ca, &symbols, t);
        apply_free_phase(&mut cb, &symbols, t);
        fft.synthesize_into(lat, &ca, &mut ga)?;
        fft.synthesize_into(lat, &cb, &mut gb)?;
        let avg = ga.iter().zip(&gb).map(|(x, y)| (x * y).norm_sqr()).sum::<f64>() / ga.len() as f64;
        total += w * avg;
    }
    Ok(total.sqrt() / ((n1.min(n2) as f64).sqrt() * norms))
}

/// Random field with unit `L^2` norm supported in `[-N, N]^3`.
pub fn random_unit_field(lattice: FrequencyLattice, rng: &mut impl Rng) -> SpectralField {
    let field = SpectralField::from_fn(lattice, |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let norm = field.l2_norm();
    field.scaled(Complex64::new(1.0 / norm, 0.0))
}

/// Ratio statistics over `n_samples` random data with the default time grid.
pub fn strichartz_certificate(
    geometry: &TorusGeometry,
    n: usize,
    p: f64,
    n_samples: usize,
    mode: CertificateMode,
    seed: u64,
) -> Result<CertificateStats> {
    certificate_with(
        geometry,
        Convention::default(),
        n,
        p,
        n_samples,
        mode,
        seed,
        DEFAULT_TIME_NODES,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn certificate_with(
    geometry: &TorusGeometry,
    convention: Convention,
    n: usize,
    p: f64,
    n_samples: usize,
    mode: CertificateMode,
    seed: u64,
    time_nodes: usize,
) -> Result<CertificateStats> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be positive"));
    }
    let lat = FrequencyLattice::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratios: Vec<f64> = match mode {
        CertificateMode::Linear => {
            if !(p > 10.0 / 3.0 && p.is_finite()) {
                return Err(Error::invalid("p", format!("{p} must exceed 10/3")));
            }
            if !is_dyadic(n as u64) {
                return Err(Error::invalid("n", format!("{n} is not a power of two")));
            }
            let data: Vec<_> = (0..n_samples).map(|_| random_unit_field(lat, &mut rng)).collect();
            data.par_iter()
                .map(|f| linear_ratio(f, p, geometry, convention, time_nodes))
                .collect::<Result<_>>()?
        }
        CertificateMode::Bilinear { n2 } => {
            let lat2 = FrequencyLattice::new(n2)?;
            let data: Vec<_> = (0..n_samples)
                .map(|_| (random_unit_field(lat, &mut rng), random_unit_field(lat2, &mut rng)))
                .collect();
            data.par_iter()
                .map(|(a, b)| bilinear_ratio(a, b, geometry, convention, time_nodes))
                .collect::<Result<_>>()?
        }
    };
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(CertificateStats {
        mode,
        n,
        p: if matches!(mode, CertificateMode::Linear) {
            p
        } else {
            2.0
        },
        samples: n_samples,
        time_nodes,
        max,
        mean,
        min,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_mode_has_unit_ratio() {
        let lat = FrequencyLattice::new(1).unwrap();
        let f = SpectralField::constant(lat, Complex64::new(1.0, 0.0));
        let r = linear_ratio(&f, 4.0, &TorusGeometry::square(), Convention::Standard, 256).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn rejects_subcritical_exponent() {
        let g = TorusGeometry::square();
        assert!(strichartz_certificate(&g, 4, 10.0 / 3.0, 2, CertificateMode::Linear, 0).is_err());
        assert!(strichartz_certificate(&g, 4, 3.0, 2, CertificateMode::Linear, 0).is_err());
        assert!(strichartz_certificate(&g, 3, 4.0, 2, CertificateMode::Linear, 0).is_err());
    }

    #[test]
    fn linear_ratio_is_scale_invariant() {
        let lat = FrequencyLattice::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_unit_field(lat, &mut rng);
        let g = TorusGeometry::irrational();
        let a = linear_ratio(&f, 4.0, &g, Convention::Standard, 64).unwrap();
        let b = linear_ratio(&f.scaled(Complex64::new(7.5, 0.0)), 4.0, &g, Convention::Standard, 64).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn l4_norm_matches_direct_sum() {
        // For p = 4 the spatial integral equals the l^2 norm of the
        // self-convolution of the coefficients, computed here directly.
        let lat = FrequencyLattice::new(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_unit_field(lat, &mut rng);
        let geom = TorusGeometry::new([1.0, 0.7, 0.4]).unwrap();
        let conv = Convention::Paper;
        let nodes = 33;
        let mut total = 0.0;
        for (t, w) in trapezoid(nodes) {
            let g = crate::torus::operators::free_propagate(&f, t, &geom, conv);
            let mut sq = std::collections::HashMap::<[i64; 3], Complex64>::new();
            for (i, a) in g.coeffs().iter().enumerate() {
                for (j, b) in g.coeffs().iter().enumerate() {
                    let (x, y) = (lat.point(i), lat.point(j));
                    *sq.entry([x[0] + y[0], x[1] + y[1], x[2] + y[2]]).or_default() += a * b;
                }
            }
            total += w * sq.values().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let expect = total.powf(0.25);
        let got = spacetime_norm(&f, 4.0, &geom, conv, nodes).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn bilinear_matches_linear_l4_for_equal_inputs() {
        let lat = FrequencyLattice::new(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_unit_field(lat, &mut rng);
        let g = TorusGeometry::square();
        let st = spacetime_norm(&f, 4.0, &g, Convention::Standard, 40).unwrap();
        let bl = bilinear_ratio(&f, &f, &g, Convention::Standard, 40).unwrap();
        assert!((bl * 2f64.sqrt() - st * st).abs() < 1e-12);
    }

    #[test]
    fn certificate_is_seed_deterministic() {
        let g = TorusGeometry::square();
        let a = certificate_with(&g, Convention::Standard, 2, 4.0, 3, CertificateMode::Linear, 5, 16).unwrap();
        let b = certificate_with(&g, Convention::Standard, 2, 4.0, 3, CertificateMode::Linear, 5, 16).unwrap();
        assert_eq!(a, b);
        assert!(a.min <= a.mean && a.mean <= a.max);
        let c = certificate_with(
            &g,
            Convention::Standard,
            1,
            0.0,
            2,
            CertificateMode::Bilinear { n2: 2 },
            5,
            16,
        )
        .unwrap();
        assert!(c.max.is_finite() && c.max > 0.0);
    }
}
