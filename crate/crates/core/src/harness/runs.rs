//! Single runs behind the CLI subcommands and their report files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::stability::{run_stability_experiment, StabilityReport};
use super::validate::{certificate_sweep, run_validation_suite, CertificateSweep, ValidationReport};
use crate::dynamics::{evolve, Observers, TimeSeries};
use crate::ensemble::{perturb, save_ensemble, EnsembleState};
use crate::error::Result;
use crate::functionals::{energy_casimir, li_yau_constant, PotentialField};
use crate::io::{write_atomic, write_json};
use crate::model::{Alpha, Coupling};
use crate::stationary::{
    build_hamiltonian, eigenvalues, scf_solve, verify_stationary, IterationRecord, StationaryResiduals, StationaryState,
};
use crate::torus::{padded_size, Convention, FrequencyLattice, TorusGeometry};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub theta: TorusGeometry,
    pub convention: Convention,
    pub count: usize,
    /// `min mu_k / k^{2/3}` over the lower half of the computed range.
    pub li_yau_c: f64,
    pub lowest: Vec<f64>,
}

/// Galerkin eigenvalues of `-Delta`, all of them, ascending.
pub fn run_spectrum(cfg: &RunConfig) -> Result<(SpectrumReport, Vec<f64>)> {
    let lat = FrequencyLattice::new(cfg.n)?;
    let zero = PotentialField::zero(padded_size(lat, 2));
    let mu = eigenvalues(&build_hamiltonian(&zero, cfg.n, &cfg.theta, cfg.convention)?, lat.len())?;
    let report = SpectrumReport {
        n: cfg.n,
        theta: cfg.theta,
        convention: cfg.convention,
        count: mu.len(),
        li_yau_c: li_yau_constant(&mu, mu.len() / 2),
        lowest: mu.iter().take(20).copied().collect(),
    };
    Ok((report, mu))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryReport {
    pub n: usize,
    pub alpha: Alpha,
    pub lambda: f64,
    pub k_max: usize,
    pub iterations: usize,
    pub sigma: f64,
    pub phi: f64,
    pub energy_casimir: f64,
    pub occupation_sum: f64,
    pub retained_states: usize,
    pub occupations: Vec<f64>,
    pub energies: Vec<f64>,
    pub residuals: StationaryResiduals,
    pub trace: Vec<IterationRecord>,
}

pub fn run_stationary(cfg: &RunConfig) -> Result<(StationaryReport, StationaryState)> {
    cfg.validate()?;
    let st = scf_solve(&cfg.scf_config())?;
    let residuals = verify_stationary(&st, &cfg.casimir, cfg.alpha)?;
    let kept = st.ensemble()?;
    let report = StationaryReport {
        n: cfg.n,
        alpha: cfg.alpha,
        lambda: cfg.lambda,
        k_max: st.occupations.len(),
        iterations: st.iterations(),
        sigma: st.sigma,
        phi: st.phi,
        energy_casimir: energy_casimir(&kept, &cfg.casimir, cfg.alpha)?,
        occupation_sum: st.occupations.iter().sum(),
        retained_states: kept.len(),
        occupations: kept.occupations().to_vec(),
        energies: st.energies[..kept.len()].to_vec(),
        residuals,
        trace: st.trace.clone(),
    };
    Ok((report, st))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveReport {
    pub n: usize,
    pub members: usize,
    pub alpha: Alpha,
    pub sign: Coupling,
    pub dt: f64,
    pub steps: usize,
    pub samples: usize,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub casimir_drift: f64,
    pub max_gram_dev: f64,
    pub aborted_at: Option<usize>,
}

/// Initial data of `evolve`: the retained stationary state, perturbed.
pub fn perturbed_stationary(cfg: &RunConfig) -> Result<EnsembleState> {
    let st = scf_solve(&cfg.scf_config())?;
    let p = &cfg.perturbation;
    perturb(&st.ensemble()?, p.amplitude, p.band, p.seed)
}

pub fn run_evolve(cfg: &RunConfig, initial: &EnsembleState) -> Result<(EvolveReport, EnsembleState, TimeSeries)> {
    cfg.validate()?;
    let evo = cfg.evolution_config();
    let observers = Observers {
        casimir: Some(&cfg.casimir),
        reference: None,
    };
    let (last, series) = evolve(initial, &evo, observers)?;
    let report = EvolveReport {
        n: initial.lattice().n(),
        members: initial.len(),
        alpha: cfg.alpha,
        sign: evo.coupling,
        dt: evo.dt,
        steps: evo.steps,
        samples: series.len(),
        mass_drift: series.relative_drift(|s| s.mass),
        energy_drift: series.relative_drift(|s| s.energy),
        casimir_drift: series.relative_drift(|s| s.energy_casimir.unwrap_or(0.0)),
        max_gram_dev: series.samples.iter().map(|s| s.gram_dev).fold(0.0, f64::max),
        aborted_at: series.aborted_at,
    };
    Ok((report, last, series))
}

/// Files written by one subcommand and whether its checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub passed: bool,
    pub summary: String,
}

pub fn emit_spectrum(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (report, mu) = run_spectrum(cfg)?;
    let mut csv = String::from("k,mu\n");
    for (k, m) in mu.iter().enumerate() {
        let _ = writeln!(csv, "{},{m:e}", k + 1);
    }
    let (json, table) = (out.join("spectrum.json"), out.join("spectrum.csv"));
    write_json(&json, &report)?;
    write_atomic(&table, csv.as_bytes())?;
    Ok(Outcome {
        files: vec![json, table],
        passed: true,
        summary: format!("{} eigenvalues, Li-Yau constant {:e}", report.count, report.li_yau_c),
    })
}

pub fn emit_stationary(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (report, st) = run_stationary(cfg)?;
    let json = out.join("stationary.json");
    write_json(&json, &report)?;
    let manifest = save_ensemble(&st.ensemble()?, out, "stationary_state")?;
    Ok(Outcome {
        files: vec![json, manifest],
        passed: true,
        summary: format!(
            "{} iterations, sigma {:e}, Phi {:e}, {} retained states",
            report.iterations, report.sigma, report.phi, report.retained_states
        ),
    })
}

pub fn emit_evolve(cfg: &RunConfig, initial: &EnsembleState, out: &Path) -> Result<Outcome> {
    let (report, last, series) = run_evolve(cfg, initial)?;
    let (json, csv) = (out.join("evolve.json"), out.join("series.csv"));
    write_json(&json, &report)?;
    series.write_csv(&csv)?;
    let manifest = save_ensemble(&last, out, "final")?;
    Ok(Outcome {
        files: vec![json, csv, manifest],
        passed: report.aborted_at.is_none(),
        summary: match report.aborted_at {
            Some(step) => format!("aborted by the blow-up guard at step {step}"),
            None => format!(
                "mass drift {:e}, energy drift {:e}, Gram deviation {:e}",
                report.mass_drift, report.energy_drift, report.max_gram_dev
            ),
        },
    })
}

fn stability_csv(report: &StabilityReport) -> String {
    let mut csv = String::from("t,lhs,rhs,margin,casimir_drift,quintic_lhs,quintic_rhs\n");
    for r in &report.rows {
        let (a, b) = r.quintic.map_or((String::new(), String::new()), |[a, b]| {
            (format!("{a:e}"), format!("{b:e}"))
        });
        let _ = writeln!(
            csv,
            "{:e},{:e},{:e},{:e},{:e},{a},{b}",
            r.t, r.lhs, r.rhs, r.margin, r.casimir_drift
        );
    }
    csv
}

pub fn emit_stability(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (report, series) = run_stability_experiment(cfg)?;
    let (json, rows, csv) = (
        out.join("stability.json"),
        out.join("stability.csv"),
        out.join("series.csv"),
    );
    write_json(&json, &report)?;
    write_atomic(&rows, stability_csv(&report).as_bytes())?;
    series.write_csv(&csv)?;
    let passed = !report.violated && report.quintic_holds != Some(false) && report.aborted_at.is_none();
    Ok(Outcome {
        files: vec![json, rows, csv],
        passed,
        summary: format!(
            "rhs {:e}, min margin {:e}, violated {}",
            report.rhs, report.min_margin, report.violated
        ),
    })
}

pub fn run_certify(cfg: &RunConfig) -> Result<CertificateSweep> {
    cfg.validate()?;
    let c = &cfg.certify;
    certificate_sweep(
        cfg.theta,
        cfg.convention,
        c.p,
        &c.linear_n,
        c.samples,
        &c.bilinear_n,
        c.bilinear_samples,
        c.time_nodes,
        c.seed,
    )
}

pub fn emit_certify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let sweep = run_certify(cfg)?;
    let json = out.join("certify.json");
    write_json(&json, &sweep)?;
    let worst = sweep.linear.iter().map(|s| s.max).fold(0.0, f64::max);
    let worst_bi = sweep.bilinear.iter().map(|b| b.stats.max).fold(0.0, f64::max);
    Ok(Outcome {
        files: vec![json],
        passed: sweep.passed,
        summary: format!(
            "max linear ratio {worst:e} (limit {:e}), max bilinear ratio {worst_bi:e} (bound {:e})",
            sweep.linear_limit, sweep.bilinear_bound
        ),
    })
}

pub fn emit_validate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let report: ValidationReport = run_validation_suite(cfg)?;
    let json = out.join("validate.json");
    write_json(&json, &report)?;
    let failed: Vec<&str> = report
        .families
        .iter()
        .filter(|f| !f.passed)
        .map(|f| f.family.as_str())
        .collect();
    Ok(Outcome {
        files: vec![json],
        passed: report.passed,
        summary: if failed.is_empty() {
            format!("{} families passed", report.families.len())
        } else {
            format!("failed families: {}", failed.join(", "))
        },
    })
}
