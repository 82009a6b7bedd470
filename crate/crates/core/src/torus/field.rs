use num_complex::Complex64;

use super::lattice::FrequencyLattice;
use crate::error::{Error, Result};

/// One complex field, stored as its Fourier coefficients on a truncated lattice.
///
/// The represented function is `u(x) = sum_xi c(xi) e^{2 pi i xi.x}` on the
/// unit coordinate cube, so `||u||_{L^2}^2 = sum |c(xi)|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    lattice: FrequencyLattice,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(lattice: FrequencyLattice) -> Self {
        Self {
            lattice,
            coeffs: vec![Complex64::new(0.0, 0.0); lattice.len()],
        }
    }

    pub fn from_coeffs(lattice: FrequencyLattice, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::SizeMismatch(format!(
                "lattice N={} holds {} coefficients, got {}",
                lattice.n(),
                lattice.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("coeffs", "coefficients must be finite"));
        }
        Ok(Self { lattice, coeffs })
    }

    pub fn from_fn(lattice: FrequencyLattice, mut f: impl FnMut([i64; 3]) -> Complex64) -> Self {
        let coeffs = lattice.points().map(&mut f).collect();
        Self { lattice, coeffs }
    }

    /// Unit-amplitude plane wave `e^{2 pi i xi.x}`.
    pub fn plane_wave(lattice: FrequencyLattice, xi: [i64; 3]) -> Result<Self> {
        let idx = lattice
            .index_of(xi)
            .ok_or_else(|| Error::invalid("xi", format!("{xi:?} lies outside the lattice N={}", lattice.n())))?;
        let mut field = Self::zeros(lattice);
        field.coeffs[idx] = Complex64::new(1.0, 0.0);
        Ok(field)
    }

    /// The constant function `value`.
    pub fn constant(lattice: FrequencyLattice, value: Complex64) -> Self {
        let mut field = Self::zeros(lattice);
        let c = lattice.center();
        field.coeffs[c] = value;
        field
    }

    pub fn lattice(&self) -> FrequencyLattice {
        self.lattice
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, xi: [i64; 3]) -> Option<Complex64> {
        self.lattice.index_of(xi).map(|i| self.coeffs[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self, other> = sum conj(self) other`.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        debug_assert_eq!(self.lattice, other.lattice);
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scaled(&self, factor: Complex64) -> SpectralField {
        SpectralField {
            lattice: self.lattice,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Complex conjugate of the represented function: `c(xi) -> conj(c(-xi))`.
    pub fn conjugate(&self) -> SpectralField {
        let coeffs = (0..self.coeffs.len())
            .map(|i| self.coeffs[self.lattice.mirror(i)].conj())
            .collect();
        SpectralField {
            lattice: self.lattice,
            coeffs,
        }
    }

    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Same function on another lattice: zero-padded or truncated.
    pub fn resized(&self, lattice: FrequencyLattice) -> SpectralField {
        let mut out = SpectralField::zeros(lattice);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if let Some(j) = lattice.index_of(self.lattice.point(i)) {
                out.coeffs[j] = c;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_wave_norm_and_inner() {
        let lat = FrequencyLattice::new(2).unwrap();
        let a = SpectralField::plane_wave(lat, [1, 0, 0]).unwrap();
        let b = SpectralField::plane_wave(lat, [0, -1, 2]).unwrap();
        assert_eq!(a.norm_sqr(), 1.0);
        assert_eq!(a.inner(&b), Complex64::new(0.0, 0.0));
        assert!(SpectralField::plane_wave(lat, [3, 0, 0]).is_err());
    }

    #[test]
    fn conjugate_maps_plane_wave_to_its_mirror() {
        let lat = FrequencyLattice::new(2).unwrap();
        let a = SpectralField::plane_wave(lat, [1, -2, 0])
            .unwrap()
            .scaled(Complex64::new(0.0, 2.0));
        let c = a.conjugate();
        assert_eq!(c.coeff([-1, 2, 0]), Some(Complex64::new(0.0, -2.0)));
        assert_eq!(c.conjugate(), a);
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        let lat = FrequencyLattice::new(1).unwrap();
        assert!(SpectralField::from_coeffs(lat, vec![Complex64::new(0.0, 0.0); 3]).is_err());
        let mut v = vec![Complex64::new(0.0, 0.0); 27];
        v[4].re = f64::NAN;
        assert!(SpectralField::from_coeffs(lat, v).is_err());
    }
}
