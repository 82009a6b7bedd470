//! Energy-Casimir stability experiment around a stationary state.

use serde::Serialize;

use super::config::RunConfig;
use crate::dynamics::{evolve_with, EvolutionConfig, Observers};
use crate::ensemble::{density, perturb, DensityField};
use crate::error::{Error, Result};
use crate::functionals::energy_casimir;
use crate::model::{Alpha, Coupling};
use crate::stationary::scf_solve;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub t: f64,
    /// `||rho(t) - rho_0||^{alpha+1}_{L^{alpha+1}} / (alpha + 1)`.
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// `H_f(u(t), lambda) - H_f(u(0), lambda)`.
    pub casimir_drift: f64,
    /// `int |rho - rho_0|^3` and `int (rho^3 - 3 rho_0^2 rho + 2 rho_0^3)`, quintic only.
    pub quintic: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub alpha: Alpha,
    pub n: usize,
    pub amplitude: f64,
    pub scf_iterations: usize,
    /// States with occupation at least `lambda_tol`; only these are evolved.
    pub retained_states: usize,
    /// `Lambda` minus the retained occupations.
    pub dropped_occupation: f64,
    /// `H_f(u_0, lambda_0)`.
    pub h_stationary: f64,
    /// `H_f(u(0), lambda_0)`.
    pub h_initial: f64,
    pub rhs: f64,
    pub rows: Vec<StabilityRow>,
    pub min_margin: f64,
    pub tolerance: f64,
    pub violated: bool,
    pub quintic_holds: Option<bool>,
    pub aborted_at: Option<usize>,
}

/// Evolution steps and time step covering `horizon` with `samples` equal intervals.
fn schedule(cfg: &RunConfig) -> (usize, f64) {
    let s = cfg.stability.samples;
    let per = (cfg.stability.horizon / (s as f64 * cfg.evolution.dt)).ceil().max(1.0) as usize;
    let steps = per * s;
    (per, cfg.stability.horizon / steps as f64)
}

/// Solves for the stationary state, perturbs it, evolves the perturbation and
/// compares the density deviation with the energy-Casimir excess.
pub fn run_stability_experiment(cfg: &RunConfig) -> Result<(StabilityReport, crate::dynamics::TimeSeries)> {
    cfg.validate()?;
    if cfg.evolution.sign != Coupling::Defocusing {
        return Err(Error::Config(
            "the stability experiment needs the defocusing sign".into(),
        ));
    }
    let alpha = cfg.alpha;
    let a = alpha.as_f64();
    let cf = cfg.casimir;
    let st = scf_solve(&cfg.scf_config())?;
    let u0 = st.ensemble()?;
    let dropped = cfg.lambda - u0.total_occupation();
    let h0 = energy_casimir(&u0, &cf, alpha)?;
    let ratio = alpha.default_padding();
    let rho0 = density(&u0, ratio)?;

    let p = &cfg.perturbation;
    let start = perturb(&u0, p.amplitude, p.band, p.seed)?;
    let h1 = energy_casimir(&start, &cf, alpha)?;
    let rhs = h1 - h0;

    let (cadence, dt) = schedule(cfg);
    let evo = EvolutionConfig {
        cadence,
        padding_ratio: cfg.evolution.padding_ratio.unwrap_or(ratio),
        ..EvolutionConfig::new(dt, cadence * cfg.stability.samples, alpha, Coupling::Defocusing)
    };
    let observers = Observers {
        casimir: Some(&cf),
        reference: Some(&rho0),
    };
    let mut quintic = Vec::new();
    let (_, series) = evolve_with(&start, &evo, observers, |_, _, rho| {
        if alpha == Alpha::Quintic {
            quintic.push(quintic_sides(rho, &rho0));
        }
        Ok(())
    })?;

    let rows: Vec<StabilityRow> = series
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let dist = s.rho_dist.unwrap_or(0.0);
            let lhs = dist.powf(a + 1.0) / (a + 1.0);
            StabilityRow {
                t: s.t,
                lhs,
                rhs,
                margin: rhs - lhs,
                casimir_drift: s.energy_casimir.unwrap_or(h1) - h1,
                quintic: quintic.get(i).copied(),
            }
        })
        .collect();
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let tolerance = 1e-10 * rhs.abs().max(1.0);
    let quintic_holds =
        (alpha == Alpha::Quintic).then(|| quintic.iter().all(|[l, r]| *l <= *r + 1e-12 * r.abs().max(1.0)));
    let report = StabilityReport {
        alpha,
        n: cfg.n,
        amplitude: p.amplitude,
        scf_iterations: st.iterations(),
        retained_states: u0.len(),
        dropped_occupation: dropped,
        h_stationary: h0,
        h_initial: h1,
        rhs,
        violated: min_margin < -tolerance,
        min_margin,
        tolerance,
        quintic_holds,
        aborted_at: series.aborted_at,
        rows,
    };
    Ok((report, series))
}

/// Both sides of `int |rho - rho_0|^3 <= int (rho^3 - 3 rho_0^2 rho + 2 rho_0^3)`.
pub fn quintic_sides(rho: &DensityField, rho0: &DensityField) -> [f64; 2] {
    let m = rho.values().len() as f64;
    let (l, r) = rho
        .values()
        .iter()
        .zip(rho0.values())
        .fold((0.0, 0.0), |(l, r), (&x, &y)| {
            let d = x - y;
            (l + (d * d * d).abs(), r + d * d * (x + 2.0 * y))
        });
    [l / m, r / m]
}
