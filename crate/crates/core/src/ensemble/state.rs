use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::torus::{Convention, FrequencyLattice, SpectralField, TorusGeometry};

/// Default tolerance on `max |Gram - I|` accepted by [`EnsembleState::new`].
pub const GRAM_TOLERANCE: f64 = 1e-8;

/// A finite orthonormal system `u_1..u_J` with occupations `lambda_j >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    lattice: FrequencyLattice,
    fields: Vec<SpectralField>,
    occupations: Vec<f64>,
    geometry: TorusGeometry,
    convention: Convention,
}

impl EnsembleState {
    pub fn new(
        lattice: FrequencyLattice,
        fields: Vec<SpectralField>,
        occupations: Vec<f64>,
        geometry: TorusGeometry,
        convention: Convention,
    ) -> Result<Self> {
        Self::with_tolerance(lattice, fields, occupations, geometry, convention, GRAM_TOLERANCE)
    }

    pub fn with_tolerance(
        lattice: FrequencyLattice,
        fields: Vec<SpectralField>,
        occupations: Vec<f64>,
        geometry: TorusGeometry,
        convention: Convention,
        gram_tolerance: f64,
    ) -> Result<Self> {
        let state = Self::unchecked(lattice, fields, occupations, geometry, convention)?;
        let dev = state.gram_matrix().deviation_from_identity();
        if !(dev <= gram_tolerance) {
            return Err(Error::invalid(
                "fields",
                format!("not orthonormal: max |Gram - I| = {dev:e} exceeds {gram_tolerance:e}"),
            ));
        }
        Ok(state)
    }

    /// Checks shapes and occupations but not orthonormality.
    pub(crate) fn unchecked(
        lattice: FrequencyLattice,
        fields: Vec<SpectralField>,
        occupations: Vec<f64>,
        geometry: TorusGeometry,
        convention: Convention,
    ) -> Result<Self> {
        if fields.len() != occupations.len() {
            return Err(Error::SizeMismatch(format!(
                "{} fields but {} occupations",
                fields.len(),
                occupations.len()
            )));
        }
        if let Some(l) = occupations.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::invalid(
                "occupations",
                format!("{l} is not a finite nonnegative number"),
            ));
        }
        if fields.iter().any(|f| f.lattice() != lattice) {
            return Err(Error::SizeMismatch("all fields must share one lattice".into()));
        }
        Ok(Self {
            lattice,
            fields,
            occupations,
            geometry,
            convention,
        })
    }

    /// Plane waves `e^{2 pi i xi.x}`, one per listed mode.
    pub fn plane_waves(
        lattice: FrequencyLattice,
        modes: &[[i64; 3]],
        occupations: Vec<f64>,
        geometry: TorusGeometry,
        convention: Convention,
    ) -> Result<Self> {
        let fields = modes
            .iter()
            .map(|&xi| SpectralField::plane_wave(lattice, xi))
            .collect::<Result<Vec<_>>>()?;
        Self::new(lattice, fields, occupations, geometry, convention)
    }

    pub fn lattice(&self) -> FrequencyLattice {
        self.lattice
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[SpectralField] {
        &self.fields
    }

    pub fn into_parts(self) -> (Vec<SpectralField>, Vec<f64>) {
        (self.fields, self.occupations)
    }

    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn total_occupation(&self) -> f64 {
        self.occupations.iter().sum()
    }

    /// Same state with the fields replaced; occupations and geometry kept.
    pub fn with_fields(&self, fields: Vec<SpectralField>) -> Result<Self> {
        Self::unchecked(
            self.lattice,
            fields,
            self.occupations.clone(),
            self.geometry,
            self.convention,
        )
    }

    /// Exchanges the fields with `fields`, which must match in count and lattice.
    pub(crate) fn swap_fields(&mut self, fields: &mut Vec<SpectralField>) {
        debug_assert_eq!(fields.len(), self.fields.len());
        std::mem::swap(&mut self.fields, fields);
    }

    /// Same fields with other occupations.
    pub fn with_occupations(&self, occupations: Vec<f64>) -> Result<Self> {
        Self::unchecked(
            self.lattice,
            self.fields.clone(),
            occupations,
            self.geometry,
            self.convention,
        )
    }

    /// Complex conjugate of every field.
    pub fn conjugate(&self) -> Self {
        Self {
            fields: self.fields.iter().map(SpectralField::conjugate).collect(),
            ..self.clone()
        }
    }

    /// `G_jk = <u_j, u_k>`.
    pub fn gram_matrix(&self) -> GramMatrix {
        let j = self.fields.len();
        let mut entries = vec![Complex64::new(0.0, 0.0); j * j];
        for a in 0..j {
            for b in a..j {
                let z = self.fields[a].inner(&self.fields[b]);
                entries[a * j + b] = z;
                entries[b * j + a] = z.conj();
            }
        }
        GramMatrix { size: j, entries }
    }

    /// Largest coefficient difference against another state on the same lattice.
    pub fn max_abs_diff(&self, other: &EnsembleState) -> f64 {
        self.fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Hermitian `J x J` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    size: usize,
    entries: Vec<Complex64>,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.size + col]
    }

    /// `max_jk |G_jk - delta_jk|`.
    pub fn deviation_from_identity(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..self.size {
            for c in 0..self.size {
                let id = if r == c { 1.0 } else { 0.0 };
                dev = dev.max((self.get(r, c) - id).norm());
            }
        }
        dev
    }
}
