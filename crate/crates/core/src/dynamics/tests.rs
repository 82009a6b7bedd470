use num_complex::Complex64;

use super::*;
use crate::casimir::CasimirFunction;
use crate::ensemble::{density, energy, random_ensemble};
use crate::torus::{free_propagate, Convention, TorusGeometry};

fn lat(n: usize) -> FrequencyLattice {
    FrequencyLattice::new(n).unwrap()
}

fn random_state(n: usize, band: u64, occ: &[f64], geometry: TorusGeometry, seed: u64) -> EnsembleState {
    random_ensemble(lat(n), occ, band, geometry, Convention::Standard, seed).unwrap()
}

fn default_state(seed: u64) -> EnsembleState {
    random_state(4, 1, &[0.6, 0.3, 0.1], TorusGeometry::irrational(), seed)
}

fn max_diff(a: &EnsembleState, b: &EnsembleState) -> f64 {
    a.max_abs_diff(b)
}

#[test]
fn zero_step_is_identity() {
    let s = default_state(1);
    for alpha in [Alpha::Cubic, Alpha::Quintic] {
        for c in [Coupling::Defocusing, Coupling::Focusing] {
            assert!(max_diff(&nonlinear_substep(&s, 0.0, alpha, c).unwrap(), &s) == 0.0);
            assert!(max_diff(&strang_step(&s, 0.0, alpha, c).unwrap(), &s) < 1e-15);
        }
    }
}

#[test]
fn constant_field_picks_up_phase() {
    let s = EnsembleState::plane_waves(
        lat(3),
        &[[0, 0, 0]],
        vec![1.0],
        TorusGeometry::square(),
        Convention::Standard,
    )
    .unwrap();
    let dt = 0.3;
    let out = nonlinear_substep(&s, dt, Alpha::Cubic, Coupling::Defocusing).unwrap();
    let c = out.fields()[0].coeff([0, 0, 0]).unwrap();
    assert!((c - Complex64::from_polar(1.0, -dt)).norm() < 1e-14);
    assert!(out.fields()[0].coeffs().iter().map(|z| z.norm()).sum::<f64>() - 1.0 < 1e-13);
    let rho = density(&out, 2).unwrap();
    assert!(rho.values().iter().all(|r| (r - 1.0).abs() < 1e-13));
}

#[test]
fn density_frozen_on_grid_before_truncation() {
    let s = default_state(2);
    for alpha in [Alpha::Cubic, Alpha::Quintic] {
        let fft = Fft3::new(padded_size(s.lattice(), alpha.default_padding()));
        let grids: Vec<Vec<Complex64>> = s.fields().iter().map(|f| fft.synthesize(f).unwrap()).collect();
        let rho: Vec<f64> = (0..fft.len())
            .map(|x| {
                s.occupations()
                    .iter()
                    .zip(&grids)
                    .map(|(l, g)| l * g[x].norm_sqr())
                    .sum()
            })
            .collect();
        let dt = 0.7;
        let after: Vec<f64> = (0..fft.len())
            .map(|x| {
                let p = Complex64::from_polar(1.0, -alpha.pow(rho[x]) * dt);
                s.occupations()
                    .iter()
                    .zip(&grids)
                    .map(|(l, g)| l * (g[x] * p).norm_sqr())
                    .sum()
            })
            .collect();
        let d = rho.iter().zip(&after).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(d < 1e-10);
    }
}

#[test]
fn empty_occupations_give_free_flow() {
    let s = default_state(3).with_occupations(vec![0.0; 3]).unwrap();
    let dt = 0.05;
    let out = strang_step(&s, dt, Alpha::Cubic, Coupling::Defocusing).unwrap();
    for (a, f) in out.fields().iter().zip(s.fields()) {
        let free = free_propagate(f, dt, s.geometry(), s.convention());
        assert!(a.max_abs_diff(&free) < 1e-14);
    }
}

#[test]
fn mass_and_gram_preserved_per_step() {
    // spectrum well inside the lattice, so truncation losses stay at round-off
    let mut s = random_state(8, 1, &[0.5, 0.25, 0.1], TorusGeometry::irrational(), 4);
    let m0 = mass(&s);
    let mut gram = s.gram_matrix().deviation_from_identity();
    for _ in 0..20 {
        let next = strang_step(&s, 0.01, Alpha::Cubic, Coupling::Defocusing).unwrap();
        assert!((mass(&next) - mass(&s)).abs() <= 1e-12 * m0);
        let g = next.gram_matrix().deviation_from_identity();
        assert!(g - gram < 1e-12);
        gram = g;
        s = next;
    }
}

fn run(s: &EnsembleState, dt: f64, t: f64, alpha: Alpha, c: Coupling) -> EnsembleState {
    let steps = (t / dt).round() as usize;
    evolve(
        s,
        &EvolutionConfig::new(dt, steps, alpha, c).with_cadence(steps.max(1)),
        Observers::default(),
    )
    .unwrap()
    .0
}

#[test]
fn second_order_global_error() {
    let s = random_state(6, 1, &[1.0, 0.5], TorusGeometry::irrational(), 5);
    for alpha in [Alpha::Cubic, Alpha::Quintic] {
        // symbol * dt must be small for the asymptotic regime
        let t = 0.1;
        let dt = 0.0025;
        let reference = run(&s, dt / 16.0, t, alpha, Coupling::Defocusing);
        let e1 = max_diff(&run(&s, dt, t, alpha, Coupling::Defocusing), &reference);
        let e2 = max_diff(&run(&s, dt / 2.0, t, alpha, Coupling::Defocusing), &reference);
        let ratio = e1 / e2;
        assert!(e2 > 1e-10, "{e2}");
        assert!((3.4..=4.6).contains(&ratio), "{alpha}: {ratio}");
    }
}

#[test]
fn time_reversal_under_conjugation() {
    let s = default_state(6);
    for alpha in [Alpha::Cubic, Alpha::Quintic] {
        for c in [Coupling::Defocusing, Coupling::Focusing] {
            let mut fwd = s.clone();
            let mut bwd = s.conjugate();
            for _ in 0..5 {
                fwd = strang_step(&fwd, 0.01, alpha, c).unwrap();
                bwd = strang_step(&bwd, -0.01, alpha, c).unwrap();
            }
            assert!(max_diff(&fwd.conjugate(), &bwd) < 1e-9);
        }
    }
}

#[test]
fn observers_and_cadence() {
    let s = random_state(3, 1, &[1.0, 0.5], TorusGeometry::square(), 7);
    let cf = CasimirFunction::boltzmann(1.0).unwrap();
    let cfg = EvolutionConfig::new(0.01, 25, Alpha::Cubic, Coupling::Defocusing).with_cadence(10);
    let rho0 = density(&s, 2).unwrap();
    let obs = Observers {
        casimir: Some(&cf),
        reference: Some(&rho0),
    };
    let (out, ts) = evolve(&s, &cfg, obs).unwrap();
    let steps: Vec<usize> = ts.samples.iter().map(|x| x.step).collect();
    assert_eq!(steps, vec![0, 10, 20, 25]);
    assert!(ts.aborted_at.is_none());
    let first = ts.first().unwrap();
    assert_eq!(first.rho_dist, Some(0.0));
    assert!((first.energy - energy(&s, Alpha::Cubic, Coupling::Defocusing).unwrap()).abs() < 1e-12);
    let f_star: f64 = s.occupations().iter().map(|l| cf.f_star(-l).unwrap()).sum();
    for x in &ts.samples {
        assert!((x.energy_casimir.unwrap() - f_star - 2.0 * x.energy).abs() < 1e-10);
        assert!(x.h1_lambda_sq <= first.mass + 2.0 * first.energy + 1e-8);
    }
    assert!((ts.last().unwrap().t - 0.25).abs() < 1e-15);
    assert!(max_diff(&out, &s) > 0.0);
    let (_, again) = evolve(&s, &cfg, obs).unwrap();
    assert_eq!(ts.to_csv(), again.to_csv());
}

#[test]
fn energy_drift_is_second_order() {
    let s = random_state(4, 1, &[2.0, 1.0, 0.5, 0.25], TorusGeometry::square(), 8);
    let drift = |dt: f64| {
        let steps = (0.5 / dt).round() as usize;
        let cfg = EvolutionConfig::new(dt, steps, Alpha::Cubic, Coupling::Defocusing).with_cadence(5);
        evolve(&s, &cfg, Observers::default())
            .unwrap()
            .1
            .relative_drift(|x| x.energy)
    };
    let (a, b) = (drift(0.004), drift(0.002));
    assert!((3.0..=5.0).contains(&(a / b)), "{a} {b}");
}

#[test]
fn blow_up_guard_returns_last_valid_state() {
    let s = default_state(9);
    let mut fields = s.fields().to_vec();
    fields[0] = fields[0].scaled(Complex64::new(1e16, 0.0));
    let bad = s.with_fields(fields).unwrap();
    let cfg = EvolutionConfig::new(0.01, 5, Alpha::Cubic, Coupling::Focusing);
    let (out, ts) = evolve(&bad, &cfg, Observers::default()).unwrap();
    assert_eq!(ts.aborted_at, Some(1));
    assert_eq!(ts.len(), 1);
    assert_eq!(max_diff(&out, &bad), 0.0);
}

#[test]
fn config_validation() {
    let ok = EvolutionConfig::new(0.01, 1, Alpha::Cubic, Coupling::Defocusing);
    assert!(ok.validate().is_ok());
    assert!(EvolutionConfig { dt: 0.0, ..ok }.validate().is_err());
    assert!(EvolutionConfig { cadence: 0, ..ok }.validate().is_err());
    let s = default_state(1);
    let wrong = density(&s, 3).unwrap();
    let obs = Observers {
        casimir: None,
        reference: Some(&wrong),
    };
    assert!(evolve(&s, &ok, obs).is_err());
}

#[test]
fn stationary_state_density_is_frozen() {
    use crate::stationary::{scf_solve, ScfConfig};
    let c = ScfConfig::new(
        TorusGeometry::irrational(),
        Convention::Standard,
        CasimirFunction::boltzmann(1.0).unwrap(),
        Alpha::Cubic,
        1.0,
        3,
    );
    let st = scf_solve(&c).unwrap();
    let s = st.ensemble().unwrap();
    let rho0 = density(&s, 2).unwrap();
    let cfg = EvolutionConfig::new(0.01, 100, Alpha::Cubic, Coupling::Defocusing).with_cadence(10);
    let obs = Observers {
        casimir: None,
        reference: Some(&rho0),
    };
    let (_, ts) = evolve(&s, &cfg, obs).unwrap();
    for x in &ts.samples {
        assert!(x.rho_dist.unwrap() < 1e-6);
    }
}
