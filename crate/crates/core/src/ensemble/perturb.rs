use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::EnsembleState;
use crate::error::{Error, Result};
use crate::linalg::hermitian_function;
use crate::torus::{lp_project, Convention, FrequencyLattice, Projection, SpectralField, TorusGeometry};

/// Gram matrices with a smallest eigenvalue below this are rejected.
pub const MIN_GRAM_EIGENVALUE: f64 = 1e-8;

fn random_band_field(lattice: FrequencyLattice, band: u64, rng: &mut ChaCha8Rng) -> Result<SpectralField> {
    let raw = SpectralField::from_fn(lattice, |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    lp_project(&raw, band, Projection::Leq)
}

/// Symmetric orthonormalization `U -> U S^{-1/2}` with `S = U^* U`.
pub fn lowdin(fields: &[SpectralField]) -> Result<Vec<SpectralField>> {
    let mut out = lowdin_pass(fields)?;
    // One more pass removes the rounding left by an ill-conditioned first one.
    let j = out.len();
    let dev = (0..j)
        .flat_map(|a| (0..j).map(move |b| (a, b)))
        .map(|(a, b)| {
            let id = if a == b { 1.0 } else { 0.0 };
            (out[a].inner(&out[b]) - id).norm()
        })
        .fold(0.0, f64::max);
    if dev > 1e-14 {
        out = lowdin_pass(&out)?;
    }
    Ok(out)
}

fn lowdin_pass(fields: &[SpectralField]) -> Result<Vec<SpectralField>> {
    let j = fields.len();
    if j == 0 {
        return Ok(Vec::new());
    }
    let mut s = vec![Complex64::new(0.0, 0.0); j * j];
    for a in 0..j {
        for b in a..j {
            let z = fields[a].inner(&fields[b]);
            s[a * j + b] = z;
            s[b * j + a] = z.conj();
        }
    }
    let (x, min) = hermitian_function(&s, j, |v| 1.0 / v.max(f64::MIN_POSITIVE).sqrt())?;
    if !(min > MIN_GRAM_EIGENVALUE) {
        return Err(Error::DegenerateGram { min_eigenvalue: min });
    }
    let lat = fields[0].lattice();
    let mut out = Vec::with_capacity(j);
    for col in 0..j {
        let mut acc = vec![Complex64::new(0.0, 0.0); lat.len()];
        for (k, f) in fields.iter().enumerate() {
            let w = x[k * j + col];
            for (a, c) in acc.iter_mut().zip(f.coeffs()) {
                *a += c * w;
            }
        }
        out.push(SpectralField::from_coeffs(lat, acc)?);
    }
    Ok(out)
}

/// Adds `amplitude` times random band-limited noise to every field and
/// restores orthonormality; occupations are unchanged.
pub fn perturb(state: &EnsembleState, amplitude: f64, band: u64, seed: u64) -> Result<EnsembleState> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::invalid(
            "amplitude",
            format!("{amplitude} must be finite and nonnegative"),
        ));
    }
    if amplitude == 0.0 {
        return Ok(state.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lat = state.lattice();
    let noisy = state
        .fields()
        .iter()
        .map(|f| {
            let noise = random_band_field(lat, band, &mut rng)?;
            let coeffs = f
                .coeffs()
                .iter()
                .zip(noise.coeffs())
                .map(|(c, n)| c + amplitude * n)
                .collect();
            SpectralField::from_coeffs(lat, coeffs)
        })
        .collect::<Result<Vec<_>>>()?;
    state.with_fields(lowdin(&noisy)?)
}

/// Random orthonormal fields smoothly cut off at dyadic scale `band`.
pub fn random_ensemble(
    lattice: FrequencyLattice,
    occupations: &[f64],
    band: u64,
    geometry: TorusGeometry,
    convention: Convention,
    seed: u64,
) -> Result<EnsembleState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = occupations
        .iter()
        .map(|_| random_band_field(lattice, band, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let fields = lowdin(&raw)?;
    EnsembleState::new(lattice, fields, occupations.to_vec(), geometry, convention)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn base() -> EnsembleState {
        random_ensemble(
            FrequencyLattice::new(3).unwrap(),
            &[0.4, 0.3, 0.2],
            2,
            TorusGeometry::irrational(),
            Convention::Standard,
            7,
        )
        .unwrap()
    }

    #[test]
    fn random_ensemble_is_orthonormal() {
        assert!(base().gram_matrix().deviation_from_identity() < 1e-14);
    }

    #[test]
    fn zero_amplitude_is_identity() {
        let s = base();
        assert_eq!(perturb(&s, 0.0, 2, 1).unwrap(), s);
    }

    #[test]
    fn small_perturbation_stays_orthonormal() {
        let s = base();
        let p = perturb(&s, 1e-3, 2, 4).unwrap();
        assert!(p.gram_matrix().deviation_from_identity() < 1e-12);
        assert_eq!(p.occupations(), s.occupations());
        let d = p.max_abs_diff(&s);
        assert!(d > 0.0 && d < 1e-2, "{d}");
    }

    #[test]
    fn same_seed_same_output() {
        let s = base();
        assert_eq!(perturb(&s, 1e-2, 1, 9).unwrap(), perturb(&s, 1e-2, 1, 9).unwrap());
        assert_ne!(perturb(&s, 1e-2, 1, 9).unwrap(), perturb(&s, 1e-2, 1, 10).unwrap());
    }

    #[test]
    fn degenerate_gram_is_reported() {
        let lat = FrequencyLattice::new(1).unwrap();
        let f = SpectralField::plane_wave(lat, [0, 0, 0]).unwrap();
        let err = lowdin(&[f.clone(), f]).unwrap_err();
        assert!(matches!(err, Error::DegenerateGram { .. }));
    }

    #[test]
    fn invalid_band_or_amplitude() {
        let s = base();
        assert!(perturb(&s, 1e-3, 3, 0).is_err());
        assert!(perturb(&s, -1.0, 2, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn perturbed_states_are_orthonormal(amp in 0.0f64..0.3, seed in any::<u64>(), band in 0u32..3) {
            let p = perturb(&base(), amp, 1 << band, seed).unwrap();
            prop_assert!(p.gram_matrix().deviation_from_identity() < 1e-10);
        }
    }
}
