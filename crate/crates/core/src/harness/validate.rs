//! Property families run as a validation suite; failures are data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Fault, RunConfig};
use crate::casimir::{validate_casimir, Casimir, CasimirFunction, SignFlippedDual};
use crate::ensemble::{random_ensemble, EnsembleState};
use crate::error::Result;
use crate::functionals::{
    density_potential, energy_casimir, free_spectrum, g_functional, li_yau_constant, psi_f, DualProblem, PotentialField,
};
use crate::model::Alpha;
use crate::numerics::golden_section_max;
use crate::stationary::{build_hamiltonian, eigensolve, eigenvalues};
use crate::torus::{
    padded_size,
    strichartz::{certificate_with, random_unit_field},
    CertificateMode, Convention, FrequencyLattice, RealGrid, TorusGeometry,
};

/// Upper bound for bilinear ratios normalized by `min(N1, N2)^{1/2}`.
pub const BILINEAR_BOUND: f64 = 4.0;
/// Allowed growth of the maximal linear ratio over the smallest scale.
pub const LINEAR_GROWTH: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub family: String,
    pub passed: bool,
    pub checks: usize,
    pub violations: usize,
    /// Largest violation of a tolerance-normalized check; `<= 1` passes.
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub casimir: String,
    pub passed: bool,
    pub families: Vec<FamilyReport>,
}

impl ValidationReport {
    pub fn family(&self, name: &str) -> Option<&FamilyReport> {
        self.families.iter().find(|f| f.family == name)
    }
}

/// Accumulates `excess / tolerance` ratios of one family.
struct Tally {
    family: &'static str,
    checks: usize,
    violations: usize,
    worst: f64,
    notes: Vec<String>,
}

impl Tally {
    fn new(family: &'static str) -> Self {
        Self {
            family,
            checks: 0,
            violations: 0,
            worst: 0.0,
            notes: Vec::new(),
        }
    }

    /// Records a check that passes when `excess <= tol`.
    fn check(&mut self, what: &str, excess: f64, tol: f64) {
        self.checks += 1;
        let r = if excess.is_nan() { f64::INFINITY } else { excess / tol };
        self.worst = self.worst.max(r);
        if !(r <= 1.0) {
            self.violations += 1;
            if self.notes.len() < 5 {
                self.notes
                    .push(format!("{what}: excess {excess:e} over tolerance {tol:e}"));
            }
        }
    }

    fn fail(&mut self, what: String) {
        self.checks += 1;
        self.violations += 1;
        self.worst = f64::INFINITY;
        if self.notes.len() < 5 {
            self.notes.push(what);
        }
    }

    fn finish(self) -> FamilyReport {
        FamilyReport {
            family: self.family.into(),
            passed: self.violations == 0 && self.checks > 0,
            checks: self.checks,
            violations: self.violations,
            worst: self.worst,
            detail: if self.notes.is_empty() {
                format!("{} checks passed", self.checks)
            } else {
                self.notes.join("; ")
            },
        }
    }
}

fn guarded(family: &'static str, run: impl FnOnce(&mut Tally) -> Result<()>) -> FamilyReport {
    let mut t = Tally::new(family);
    if let Err(e) = run(&mut t) {
        t.fail(format!("error: {e}"));
    }
    t.finish()
}

fn random_potential(size: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> Result<PotentialField> {
    let vals = (0..size.pow(3)).map(|_| rng.random_range(0.0..amplitude)).collect();
    PotentialField::new(RealGrid::new(size, vals)?)
}

fn random_state(
    n: usize,
    geometry: TorusGeometry,
    convention: Convention,
    rng: &mut ChaCha8Rng,
) -> Result<EnsembleState> {
    let lat = FrequencyLattice::new(n)?;
    let j = rng.random_range(1..=4usize.min(lat.len()));
    let occ: Vec<f64> = (0..j).map(|_| rng.random_range(0.0..1.0)).collect();
    let band = 1u64 << rng.random_range(0..3u32);
    random_ensemble(lat, &occ, band, geometry, convention, rng.random())
}

/// `F*(-lambda) >= -lambda s - F(s)` with equality at `lambda = f(s)` on
/// `points` grid values, plus a golden-section oracle for `F*(-1)`.
pub fn fenchel_young(cf: &dyn Casimir, points: usize, seed: u64) -> FamilyReport {
    guarded("fenchel_young", |t| {
        for i in 0..points {
            let s = -3.0 + 8.0 * i as f64 / (points.max(2) - 1) as f64;
            let lambda = cf.f(s);
            let expected = -lambda * s - cf.big_f(s);
            let got = cf.f_star(-lambda)?;
            t.check(
                &format!("equality at s={s}"),
                (got - expected).abs(),
                1e-9 * (1.0 + expected.abs()),
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..points {
            let lambda = rng.random_range(1e-3..5.0);
            let s = rng.random_range(-5.0..10.0);
            let gap = cf.f_star(-lambda)? + lambda * s + cf.big_f(s);
            t.check(
                &format!("inequality at lambda={lambda}, s={s}"),
                -gap,
                1e-12 * (1.0 + lambda * s.abs()),
            );
        }
        let s1 = cf.f_inverse(1.0)?;
        let (_, oracle) = golden_section_max(|s| -s - cf.big_f(s), s1 - 10.0, s1 + 10.0, 1e-10);
        let got = cf.f_star(-1.0)?;
        t.check(
            "F*(-1) against golden section",
            (got - oracle).abs(),
            1e-9 * (1.0 + oracle.abs()),
        );
        if cf.f_star(0.5).is_ok() {
            t.fail("F*(y) accepted y > 0".into());
        }
        Ok(())
    })
}

/// Class verdicts for the configured function and the shipped references;
/// `shifted_power(p=2)` violates the decay bound and must be rejected.
pub fn casimir_class(cf: &dyn Casimir) -> FamilyReport {
    guarded("casimir_class", |t| {
        let members: [&dyn Casimir; 3] = [
            cf,
            &CasimirFunction::boltzmann(1.0)?,
            &CasimirFunction::shifted_power(3.0, 1.0)?,
        ];
        for c in members {
            let r = validate_casimir(c);
            if !r.passed {
                let why: Vec<_> = r
                    .failures()
                    .iter()
                    .map(|c| format!("{}: {}", c.condition, c.detail))
                    .collect();
                t.fail(format!("{} rejected ({})", r.family, why.join(", ")));
            } else {
                t.check(&r.family, 0.0, 1.0);
            }
        }
        let outside = validate_casimir(&CasimirFunction::shifted_power(2.0, 1.0)?);
        if outside.failed("iii") {
            t.check(&outside.family, 0.0, 1.0);
        } else {
            t.fail(format!("{} accepted", outside.family));
        }
        Ok(())
    })
}

/// `F(<u, H u>) <= <u, F(H) u>` for random unit vectors, with equality at
/// eigenvectors, for `H = -Delta + V` with a random potential.
pub fn jensen(
    cf: &dyn Casimir,
    n: usize,
    geometry: TorusGeometry,
    convention: Convention,
    vectors: usize,
    seed: u64,
) -> FamilyReport {
    guarded("jensen", |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = FrequencyLattice::new(n)?;
        let v = random_potential(padded_size(lat, 2), 5.0, &mut rng)?;
        let h = build_hamiltonian(&v, n, &geometry, convention)?;
        let e = eigensolve(&h, h.dim())?;
        let big_f: Vec<f64> = e.values.iter().map(|m| cf.big_f(*m)).collect();
        let data: Vec<_> = (0..vectors).map(|_| random_unit_field(lat, &mut rng)).collect();
        let rows = data
            .par_iter()
            .map(|u| -> Result<(f64, f64)> {
                let mean = h.apply(u)?.inner(u).re;
                let avg: f64 = e
                    .vectors
                    .iter()
                    .zip(&big_f)
                    .map(|(phi, fv)| phi.inner(u).norm_sqr() * fv)
                    .sum();
                Ok((cf.big_f(mean), avg))
            })
            .collect::<Result<Vec<_>>>()?;
        for (lhs, rhs) in rows {
            t.check("random vector", lhs - rhs, 1e-10 * rhs.abs().max(1.0));
        }
        let stride = (e.values.len() / 50).max(1);
        for k in (0..e.values.len()).step_by(stride) {
            let mean = h.apply(&e.vectors[k])?.inner(&e.vectors[k]).re;
            t.check(
                &format!("eigenvector {k}"),
                (cf.big_f(mean) - big_f[k]).abs(),
                1e-10 * big_f[k].abs().max(1.0),
            );
        }
        Ok(())
    })
}

/// `Psi_f(u, lambda, V) >= -Tr F(-Delta + V)` over the Galerkin space for
/// random states and potentials, with equality for the eigenstates occupied
/// by `f(mu_k)`.
pub fn trace_bound(
    cf: &dyn Casimir,
    n: usize,
    geometry: TorusGeometry,
    convention: Convention,
    states: usize,
    potentials: usize,
    seed: u64,
) -> FamilyReport {
    guarded("trace_bound", |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lat = FrequencyLattice::new(n)?;
        for p in 0..potentials {
            let v = random_potential(padded_size(lat, 2), 5.0, &mut rng)?;
            let h = build_hamiltonian(&v, n, &geometry, convention)?;
            let e = eigensolve(&h, h.dim())?;
            let trace: f64 = e.values.iter().map(|m| cf.big_f(*m)).sum();
            let sample: Vec<_> = (0..states)
                .map(|_| random_state(n, geometry, convention, &mut rng))
                .collect::<Result<_>>()?;
            let psis = sample
                .par_iter()
                .map(|s| psi_f(s, cf, &v))
                .collect::<Result<Vec<_>>>()?;
            for psi in psis {
                t.check(&format!("potential {p}"), -trace - psi, 1e-12 * trace.abs().max(1.0));
            }
            let occ = e.values.iter().map(|m| cf.f(*m)).collect();
            let eig = EnsembleState::new(lat, e.vectors, occ, geometry, convention)?;
            let psi = psi_f(&eig, cf, &v)?;
            t.check(
                &format!("eigenstates of potential {p}"),
                (psi + trace).abs(),
                1e-8 * trace.abs().max(1.0),
            );
        }
        Ok(())
    })
}

/// `G(u, lambda, rho^alpha, sigma) = H_f + sigma (sum lambda - Lambda)`, no
/// feasible potential exceeds it, and `Phi` is midpoint concave.
#[allow(clippy::too_many_arguments)]
pub fn duality(
    cf: &dyn Casimir,
    n: usize,
    geometry: TorusGeometry,
    convention: Convention,
    alpha: Alpha,
    lambda_total: f64,
    states: usize,
    perturbations: usize,
    pairs: usize,
    seed: u64,
) -> FamilyReport {
    guarded("duality", |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..states {
            let st = random_state(n, geometry, convention, &mut rng)?;
            let sigma = rng.random_range(-2.0..2.0);
            let v = density_potential(&st, alpha)?;
            let g = g_functional(&st, cf, &v, sigma, lambda_total, alpha)?;
            let hf = energy_casimir(&st, cf, alpha)? + sigma * (st.total_occupation() - lambda_total);
            t.check(
                &format!("identity at state {i}"),
                (g - hf).abs(),
                1e-10 * hf.abs().max(1.0),
            );
            let top = v.values().iter().fold(0.0f64, |m, x| m.max(*x)).max(1e-3);
            for _ in 0..perturbations {
                let eps = 10f64.powf(rng.random_range(-3.0..0.0)) * top;
                let vals = v
                    .values()
                    .iter()
                    .map(|x| (x + eps * rng.random_range(-1.0..1.0)).max(0.0))
                    .collect();
                let w = PotentialField::new(RealGrid::new(v.size(), vals)?)?;
                let gw = g_functional(&st, cf, &w, sigma, lambda_total, alpha)?;
                t.check(&format!("perturbation at state {i}"), gw - g, 1e-9);
            }
        }
        let np = n.min(4);
        let lat = FrequencyLattice::new(np)?;
        let dual = DualProblem::new(cf, lambda_total, alpha, np, lat.len(), geometry, convention)?;
        let size = padded_size(lat, 2);
        for i in 0..pairs {
            let (v1, v2) = (
                random_potential(size, 4.0, &mut rng)?,
                random_potential(size, 4.0, &mut rng)?,
            );
            let (s1, s2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let mid = v1
                .values()
                .iter()
                .zip(v2.values())
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let vm = PotentialField::new(RealGrid::new(size, mid)?)?;
            let m = dual.phi(&vm, 0.5 * (s1 + s2))?;
            let avg = 0.5 * (dual.phi(&v1, s1)? + dual.phi(&v2, s2)?);
            t.check(&format!("concavity pair {i}"), avg - m, 1e-9 * avg.abs().max(1.0));
        }
        Ok(())
    })
}

/// Free Galerkin eigenvalues against exact lattice values, the ellipsoid
/// enumeration against them, and Li-Yau growth on the upper half.
pub fn spectrum(geometry: TorusGeometry, convention: Convention, n: usize) -> FamilyReport {
    guarded("spectrum", |t| {
        let lat = FrequencyLattice::new(n)?;
        let h = build_hamiltonian(&PotentialField::zero(padded_size(lat, 2)), n, &geometry, convention)?;
        let mu = eigenvalues(&h, h.dim())?;
        let mut exact: Vec<f64> = lat
            .points()
            .map(|xi| geometry.laplacian_symbol(xi, convention))
            .collect();
        exact.sort_by(f64::total_cmp);
        for (k, (a, b)) in mu.iter().zip(&exact).enumerate() {
            t.check(&format!("eigenvalue {k}"), (a - b).abs(), 1e-10 * b.max(1.0));
        }
        let theta_min = geometry.theta().iter().copied().fold(f64::INFINITY, f64::min);
        let inside = convention.scale() * theta_min * ((n + 1) as f64).powi(2);
        let complete = exact.iter().take_while(|&&m| m < inside).count();
        for (k, (a, b)) in free_spectrum(&geometry, convention, complete)
            .iter()
            .zip(&exact)
            .enumerate()
        {
            t.check(&format!("enumerated eigenvalue {k}"), (a - b).abs(), 1e-10 * b.max(1.0));
        }
        let half = mu.len() / 2;
        let c = li_yau_constant(&mu, half);
        if !(c > 0.0 && c.is_finite()) {
            t.fail(format!("Li-Yau constant {c} on the lower half"));
        }
        for (k, m) in mu.iter().enumerate().skip(half) {
            let bound = c * ((k + 1) as f64).powf(2.0 / 3.0);
            t.check(&format!("Li-Yau at k={}", k + 1), bound - m, 1e-12 * bound.max(1.0));
        }
        Ok(())
    })
}

/// Linear ratio growth across `linear_n` and bilinear ratios across all
/// pairs of `bilinear_n`, both bounded.
#[allow(clippy::too_many_arguments)]
pub fn strichartz(
    geometry: TorusGeometry,
    convention: Convention,
    p: f64,
    linear_n: &[usize],
    samples: usize,
    bilinear_n: &[usize],
    bilinear_samples: usize,
    time_nodes: usize,
    seed: u64,
) -> FamilyReport {
    guarded("strichartz", |t| {
        let sweep = certificate_sweep(
            geometry,
            convention,
            p,
            linear_n,
            samples,
            bilinear_n,
            bilinear_samples,
            time_nodes,
            seed,
        )?;
        for s in &sweep.linear {
            t.check(
                &format!("linear N={}", s.n),
                s.max - sweep.linear_limit,
                1e-12 * sweep.linear_limit,
            );
        }
        for b in &sweep.bilinear {
            t.check(
                &format!("bilinear ({}, {})", b.n1, b.n2),
                b.stats.max - BILINEAR_BOUND,
                1e-12,
            );
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BilinearEntry {
    pub n1: usize,
    pub n2: usize,
    pub stats: crate::torus::CertificateStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSweep {
    pub linear: Vec<crate::torus::CertificateStats>,
    /// `LINEAR_GROWTH` times the maximal ratio at the smallest scale.
    pub linear_limit: f64,
    pub bilinear: Vec<BilinearEntry>,
    pub bilinear_bound: f64,
    pub passed: bool,
}

/// Linear and bilinear certificate statistics; sample seeds depend only on
/// `seed` and the scales.
#[allow(clippy::too_many_arguments)]
pub fn certificate_sweep(
    geometry: TorusGeometry,
    convention: Convention,
    p: f64,
    linear_n: &[usize],
    samples: usize,
    bilinear_n: &[usize],
    bilinear_samples: usize,
    time_nodes: usize,
    seed: u64,
) -> Result<CertificateSweep> {
    let mut scales = linear_n.to_vec();
    scales.sort_unstable();
    scales.dedup();
    let linear = scales
        .iter()
        .map(|&n| {
            certificate_with(
                &geometry,
                convention,
                n,
                p,
                samples,
                CertificateMode::Linear,
                mix(seed, n, 0),
                time_nodes,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let linear_limit = linear.first().map_or(f64::INFINITY, |s| LINEAR_GROWTH * s.max);
    let mut bilinear = Vec::new();
    for &n1 in bilinear_n {
        for &n2 in bilinear_n {
            let stats = certificate_with(
                &geometry,
                convention,
                n1,
                p,
                bilinear_samples,
                CertificateMode::Bilinear { n2 },
                mix(seed, n1, n2),
                time_nodes,
            )?;
            bilinear.push(BilinearEntry { n1, n2, stats });
        }
    }
    let passed = linear.iter().all(|s| s.max < linear_limit) && bilinear.iter().all(|b| b.stats.max < BILINEAR_BOUND);
    Ok(CertificateSweep {
        linear,
        linear_limit,
        bilinear,
        bilinear_bound: BILINEAR_BOUND,
        passed,
    })
}

fn mix(seed: u64, a: usize, b: usize) -> u64 {
    seed ^ ((a as u64) << 32) ^ (b as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Every family at the sizes in `cfg.validate`, on the configured Casimir
/// function (sign-flipped in `F*` when that fault is injected).
pub fn run_validation_suite(cfg: &RunConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let flipped = SignFlippedDual(cfg.casimir);
    let cf: &dyn Casimir = match cfg.validate.inject {
        Some(Fault::FlipDualSign) => &flipped,
        None => &cfg.casimir,
    };
    let v = &cfg.validate;
    let (g, c) = (cfg.theta, cfg.convention);
    let families = vec![
        fenchel_young(cf, 100, v.seed),
        casimir_class(cf),
        jensen(cf, v.n, g, c, v.samples * 10, v.seed),
        trace_bound(cf, v.n, g, c, v.samples, v.potentials, v.seed),
        duality(cf, v.n, g, c, cfg.alpha, cfg.lambda, v.samples, 5, v.samples, v.seed),
        spectrum(g, c, v.n),
        strichartz(
            g,
            c,
            cfg.certify.p,
            &[2, 4],
            v.samples.min(5),
            &[1, 2],
            v.samples.min(5),
            32,
            v.seed,
        ),
    ];
    Ok(ValidationReport {
        casimir: cf.name(),
        passed: families.iter().all(|f| f.passed),
        families,
    })
}
