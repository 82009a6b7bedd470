//! Eigenpairs of `-Delta + V` for real `V`.
//!
//! `H` commutes with `u -> conj(u)`, so in the basis `e_0`,
//! `cos_p = (e_p + e_-p)/sqrt 2`, `sin_p = i(e_-p - e_p)/sqrt 2` (one per pair
//! `+-p`) it is real symmetric. Couplings that vanish split that matrix into
//! independent blocks, which makes nearly constant potentials cheap.

use std::cmp::Ordering;
use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use super::hamiltonian::HamiltonianRep;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, sym_eigenvalues};
use crate::torus::SpectralField;

/// Potential coefficients at most this fraction of `max(1, max |V_hat|)` are
/// treated as zero when splitting the matrix into blocks.
pub const COUPLING_DROP: f64 = 1e-14;

/// Relative gap below which eigenvalues count as one degenerate cluster.
pub const CLUSTER_TOL: f64 = 1e-10;

/// Ascending eigenvalues with orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<SpectralField>,
}

#[derive(Clone, Copy)]
enum Real {
    Center,
    Cos(usize),
    Sin(usize),
}

struct Blocks {
    /// Real-basis members of each block.
    members: Vec<Vec<Real>>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Groups lattice pairs `{p, -p}` connected by a retained coupling.
fn blocks(h: &HamiltonianRep) -> Blocks {
    let lat = h.lattice();
    let c = lat.center();
    let vl = h.vhat_lattice();
    let scale = h.vhat_values().iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let couplings: Vec<[i64; 3]> = (0..vl.len())
        .filter(|&i| i != vl.center() && h.vhat_values()[i].norm() > COUPLING_DROP * scale)
        .map(|i| vl.point(i))
        .collect();
    // Pair ids: 0..c for p < c, c for the center.
    let pair_of = |idx: usize| if idx <= c { idx } else { lat.mirror(idx) };
    let mut parent: Vec<usize> = (0..=c).collect();
    let mut components = c + 1;
    'outer: for p in 0..=c {
        let xi = lat.point(p);
        for k in &couplings {
            if let Some(q) = lat.index_of([xi[0] - k[0], xi[1] - k[1], xi[2] - k[2]]) {
                let (a, b) = (find(&mut parent, p), find(&mut parent, pair_of(q)));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                    components -= 1;
                    if components == 1 {
                        break 'outer;
                    }
                }
            }
        }
    }
    let mut root_slot = vec![usize::MAX; c + 1];
    let mut members: Vec<Vec<Real>> = Vec::new();
    for p in 0..=c {
        let r = find(&mut parent, p);
        if root_slot[r] == usize::MAX {
            root_slot[r] = members.len();
            members.push(Vec::new());
        }
        let m = &mut members[root_slot[r]];
        if p == c {
            m.push(Real::Center);
        } else {
            m.push(Real::Cos(p));
            m.push(Real::Sin(p));
        }
    }
    Blocks { members }
}

fn real_entry(h: &HamiltonianRep, a: Real, b: Real) -> f64 {
    let lat = h.lattice();
    let c = lat.center();
    let hv = |p: usize, q: usize| -> Complex64 {
        let (x, y) = (lat.point(p), lat.point(q));
        let mut z = h.vhat([x[0] - y[0], x[1] - y[1], x[2] - y[2]]);
        if p == q {
            z += h.symbols()[p];
        }
        z
    };
    let m = |q: usize| lat.mirror(q);
    match (a, b) {
        (Real::Center, Real::Center) => hv(c, c).re,
        (Real::Center, Real::Cos(q)) | (Real::Cos(q), Real::Center) => SQRT_2 * hv(c, q).re,
        (Real::Center, Real::Sin(q)) | (Real::Sin(q), Real::Center) => SQRT_2 * hv(c, q).im,
        (Real::Cos(p), Real::Cos(q)) => hv(p, q).re + hv(p, m(q)).re,
        (Real::Sin(p), Real::Sin(q)) => hv(p, q).re - hv(p, m(q)).re,
        (Real::Cos(p), Real::Sin(q)) => hv(p, q).im - hv(p, m(q)).im,
        (Real::Sin(p), Real::Cos(q)) => hv(q, p).im - hv(q, m(p)).im,
    }
}

fn block_matrix(h: &HamiltonianRep, members: &[Real]) -> Vec<f64> {
    let n = members.len();
    let mut a = vec![0.0; n * n];
    for j in 0..n {
        for i in j..n {
            let v = real_entry(h, members[i], members[j]);
            a[i + n * j] = v;
            a[j + n * i] = v;
        }
    }
    a
}

fn check_k_max(h: &HamiltonianRep, k_max: usize) -> Result<()> {
    if k_max > h.dim() {
        return Err(Error::invalid(
            "k_max",
            format!("{k_max} exceeds the basis dimension {}", h.dim()),
        ));
    }
    Ok(())
}

/// The `k_max` lowest eigenvalues, ascending.
pub fn eigenvalues(h: &HamiltonianRep, k_max: usize) -> Result<Vec<f64>> {
    check_k_max(h, k_max)?;
    let mut all = Vec::with_capacity(h.dim());
    for members in blocks(h).members {
        all.extend(sym_eigenvalues(&block_matrix(h, &members), members.len())?);
    }
    all.sort_by(f64::total_cmp);
    all.truncate(k_max);
    Ok(all)
}

fn to_field(h: &HamiltonianRep, members: &[Real], x: &[f64]) -> Result<SpectralField> {
    let lat = h.lattice();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); lat.len()];
    for (r, &v) in members.iter().zip(x) {
        match *r {
            Real::Center => coeffs[lat.center()] += v,
            Real::Cos(p) => {
                coeffs[p] += v / SQRT_2;
                coeffs[lat.mirror(p)] += v / SQRT_2;
            }
            Real::Sin(p) => {
                coeffs[p] += Complex64::new(0.0, -v / SQRT_2);
                coeffs[lat.mirror(p)] += Complex64::new(0.0, v / SQRT_2);
            }
        }
    }
    SpectralField::from_coeffs(lat, coeffs)
}

/// Index of the largest coefficient modulus (first one on ties).
fn dominant(f: &SpectralField) -> usize {
    let mut best = 0;
    let mut bm = -1.0;
    for (i, c) in f.coeffs().iter().enumerate() {
        let m = c.norm_sqr();
        if m > bm * (1.0 + 1e-12) {
            best = i;
            bm = m;
        }
    }
    best
}

/// Rotates the phase so the dominant coefficient is real and positive.
fn normalize_phase(f: SpectralField) -> SpectralField {
    let c = f.coeffs()[dominant(&f)];
    let norm = c.norm();
    if norm == 0.0 {
        return f;
    }
    f.scaled(c.conj() / norm)
}

fn lexicographic(a: &SpectralField, b: &SpectralField) -> Ordering {
    let (da, db) = (dominant(a), dominant(b));
    da.cmp(&db).then_with(|| {
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            let o = y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im));
            if (x - y).norm() > 1e-12 && o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

/// The `k_max` lowest eigenpairs. Within a degenerate cluster, vectors are
/// ordered by the index of their dominant coefficient, then
/// lexicographically, and each has its dominant coefficient real positive.
pub fn eigensolve(h: &HamiltonianRep, k_max: usize) -> Result<Eigenpairs> {
    check_k_max(h, k_max)?;
    let mut pairs: Vec<(f64, SpectralField)> = Vec::with_capacity(h.dim());
    for members in blocks(h).members {
        let evd = sym_eigen(&block_matrix(h, &members), members.len())?;
        for k in 0..members.len() {
            pairs.push((evd.values[k], to_field(h, &members, evd.vector(k))?));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vectors: Vec<SpectralField> = pairs.into_iter().map(|p| normalize_phase(p.1)).collect();
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] <= CLUSTER_TOL * values[end].abs().max(1.0) {
            end += 1;
        }
        if end - start > 1 {
            vectors[start..end].sort_by(lexicographic);
        }
        start = end;
    }
    values.truncate(k_max);
    vectors.truncate(k_max);
    Ok(Eigenpairs { values, vectors })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::functionals::PotentialField;
    use crate::stationary::build_hamiltonian;
    use crate::torus::{padded_size, Convention, FrequencyLattice, RealGrid, TorusGeometry};

    fn random_h(n: usize, seed: u64, geom: TorusGeometry) -> HamiltonianRep {
        let lat = FrequencyLattice::new(n).unwrap();
        let size = padded_size(lat, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..size.pow(3)).map(|_| rng.random_range(0.0..20.0)).collect();
        let v = PotentialField::new(RealGrid::new(size, vals).unwrap()).unwrap();
        build_hamiltonian(&v, n, &geom, Convention::Standard).unwrap()
    }

    #[test]
    fn free_square_torus_levels() {
        let h = build_hamiltonian(
            &PotentialField::zero(6),
            1,
            &TorusGeometry::square(),
            Convention::Standard,
        )
        .unwrap();
        let e = eigensolve(&h, 27).unwrap();
        assert_eq!(e.values[0], 0.0);
        for k in 1..7 {
            assert!((e.values[k] - 4.0 * PI * PI).abs() < 1e-12);
        }
        assert!(e.values[7] > 4.0 * PI * PI + 1.0);
    }

    #[test]
    fn anisotropic_level_is_a_sign_pair() {
        let g = TorusGeometry::irrational();
        let h = build_hamiltonian(&PotentialField::zero(10), 2, &g, Convention::Standard).unwrap();
        let mu = eigenvalues(&h, h.dim()).unwrap();
        let target = 4.0 * PI * PI * g.theta()[1];
        let mult = mu.iter().filter(|m| (*m - target).abs() < 1e-9).count();
        assert_eq!(mult, 2);
    }

    #[test]
    fn constant_shift() {
        let h = build_hamiltonian(
            &PotentialField::constant(6, 5.0).unwrap(),
            1,
            &TorusGeometry::square(),
            Convention::Standard,
        )
        .unwrap();
        let e = eigensolve(&h, 3).unwrap();
        assert!((e.values[0] - 5.0).abs() < 1e-12);
        assert_eq!(e.vectors[0].coeffs()[13], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn random_potential_residuals_and_orthonormality() {
        let h = random_h(2, 3, TorusGeometry::irrational());
        let d = h.dim();
        let e = eigensolve(&h, d).unwrap();
        let scale = h.norm_bound();
        for (mu, u) in e.values.iter().zip(&e.vectors) {
            let hu = h.apply(u).unwrap();
            let r = hu
                .coeffs()
                .iter()
                .zip(u.coeffs())
                .map(|(a, b)| (a - b * mu).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(r <= 1e-9 * scale, "residual {r}");
        }
        for a in 0..d {
            for b in 0..d {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((e.vectors[a].inner(&e.vectors[b]) - want).norm() < 1e-10);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let vals = eigenvalues(&h, 10).unwrap();
        assert_eq!(vals.len(), 10);
        for (a, b) in vals.iter().zip(&e.values) {
            assert!((a - b).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn eigenvalues_match_complex_hermitian_embedding() {
        // Independent path: eigenvalues of the 2D x 2D real embedding of the
        // complex matrix are those of H, each twice.
        let h = random_h(1, 8, TorusGeometry::square());
        let d = h.dim();
        let n = 2 * d;
        let mut m = vec![0.0; n * n];
        for i in 0..d {
            for j in 0..d {
                let z = h.entry(i, j);
                m[i + n * j] = z.re;
                m[(i + d) + n * (j + d)] = z.re;
                m[(i + d) + n * j] = z.im;
                m[i + n * (j + d)] = -z.im;
            }
        }
        let doubled = crate::linalg::sym_eigenvalues(&m, n).unwrap();
        let mu = eigenvalues(&h, d).unwrap();
        for k in 0..d {
            assert!((doubled[2 * k] - mu[k]).abs() < 1e-10);
            assert!((doubled[2 * k + 1] - mu[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn nonnegative_potential_raises_every_level() {
        let free = build_hamiltonian(
            &PotentialField::zero(10),
            2,
            &TorusGeometry::irrational(),
            Convention::Standard,
        )
        .unwrap();
        let h = random_h(2, 5, TorusGeometry::irrational());
        let (a, b) = (
            eigenvalues(&free, free.dim()).unwrap(),
            eigenvalues(&h, h.dim()).unwrap(),
        );
        assert!(a.iter().zip(&b).all(|(x, y)| y >= &(x - 1e-10)));
    }

    #[test]
    fn deterministic_and_k_max_checked() {
        let h = random_h(1, 1, TorusGeometry::square());
        assert_eq!(eigensolve(&h, 27).unwrap(), eigensolve(&h, 27).unwrap());
        assert!(eigensolve(&h, 28).is_err());
    }

    #[test]
    fn degenerate_free_vectors_are_ordered() {
        let h = build_hamiltonian(
            &PotentialField::zero(6),
            1,
            &TorusGeometry::square(),
            Convention::Standard,
        )
        .unwrap();
        let e = eigensolve(&h, 7).unwrap();
        let dom: Vec<usize> = e.vectors[1..7].iter().map(dominant).collect();
        assert!(dom.windows(2).all(|w| w[0] <= w[1]), "{dom:?}");
        for v in &e.vectors {
            let c = v.coeffs()[dominant(v)];
            assert!(c.re > 0.0 && c.im.abs() < 1e-15);
        }
    }
}
