use serde::Serialize;

use super::eigen::eigensolve;
use super::hamiltonian::build_hamiltonian;
use super::sigma::{occupation_sum, solve_sigma};
use super::verify::{verify_stationary, StationaryResiduals};
use crate::casimir::{validate_casimir, Casimir, CasimirFunction};
use crate::ensemble::{density_on, DensityField, EnsembleState};
use crate::error::{Error, Result};
use crate::functionals::{default_k_max, DualProblem, PotentialField, TailModel};
use crate::model::Alpha;
use crate::torus::{padded_size, Convention, Fft3, FrequencyLattice, RealGrid, SpectralField, TorusGeometry};

/// Smallest step size tried before an iteration is declared stuck.
const MIN_MIXING: f64 = 1e-6;

/// Relative slack on `Phi` decreases between accepted iterates.
pub const PHI_SLACK: f64 = 1e-12;

/// Settings of the self-consistent iteration.
#[derive(Debug, Clone)]
pub struct ScfConfig {
    pub geometry: TorusGeometry,
    pub convention: Convention,
    pub casimir: CasimirFunction,
    pub alpha: Alpha,
    pub lambda_total: f64,
    pub n: usize,
    /// Number of computed eigenvalues; `None` picks the default for `n`.
    pub k_max: Option<usize>,
    pub mixing: f64,
    /// History length of Anderson acceleration; `0` is plain linear mixing.
    pub anderson_depth: usize,
    pub tol_v: f64,
    pub tol_lambda: f64,
    pub max_iter: usize,
    /// Occupations below this are left out of the density.
    pub lambda_tol: f64,
    /// Starting potential on the padded grid; `None` starts from `Lambda^alpha`.
    pub initial_v: Option<PotentialField>,
}

impl ScfConfig {
    pub fn new(
        geometry: TorusGeometry,
        convention: Convention,
        casimir: CasimirFunction,
        alpha: Alpha,
        lambda_total: f64,
        n: usize,
    ) -> Self {
        Self {
            geometry,
            convention,
            casimir,
            alpha,
            lambda_total,
            n,
            k_max: None,
            mixing: 0.5,
            anderson_depth: 0,
            tol_v: 1e-10,
            tol_lambda: 1e-10,
            max_iter: 200,
            lambda_tol: 1e-12,
            initial_v: None,
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max.unwrap_or_else(|| default_k_max(self.n))
    }

    /// Side of the grid carrying `V` and `rho`.
    pub fn grid_size(&self) -> Result<usize> {
        Ok(padded_size(
            FrequencyLattice::new(self.n)?,
            self.alpha.default_padding(),
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_total > 0.0 && self.lambda_total.is_finite()) {
            return Err(Error::invalid("lambda", "must be positive"));
        }
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(Error::invalid("mixing", format!("{} is outside (0, 1]", self.mixing)));
        }
        for (name, v) in [("tol_v", self.tol_v), ("tol_lambda", self.tol_lambda)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if !(self.lambda_tol >= 0.0 && self.lambda_tol.is_finite()) {
            return Err(Error::invalid("lambda_tol", "must be nonnegative"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        let d = FrequencyLattice::new(self.n)?.len();
        let k = self.k_max();
        if k == 0 || k > d {
            return Err(Error::invalid("k_max", format!("{k} is outside 1..={d}")));
        }
        let report = validate_casimir(&self.casimir);
        if !report.passed {
            let failed: Vec<_> = report.failures().iter().map(|c| c.condition).collect();
            return Err(Error::invalid(
                "casimir",
                format!("{} fails class condition(s) {}", report.family, failed.join(", ")),
            ));
        }
        if let Some(v) = &self.initial_v {
            let g = self.grid_size()?;
            if v.size() != g {
                return Err(Error::SizeMismatch(format!(
                    "initial potential grid {} != {g}",
                    v.size()
                )));
            }
        }
        Ok(())
    }
}

/// One accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phi: f64,
    pub sigma: f64,
    pub residual_v: f64,
    pub residual_lambda: f64,
    pub mixing: f64,
    pub anderson: bool,
    pub backtracks: usize,
}

/// Output of the self-consistent iteration.
#[derive(Debug, Clone)]
pub struct StationaryState {
    pub lattice: FrequencyLattice,
    pub geometry: TorusGeometry,
    pub convention: Convention,
    pub alpha: Alpha,
    pub lambda_total: f64,
    pub casimir: CasimirFunction,
    /// Eigenfunctions with occupation at least `lambda_tol`.
    pub fields: Vec<SpectralField>,
    pub occupations: Vec<f64>,
    /// All computed eigenvalues, ascending.
    pub energies: Vec<f64>,
    pub density: DensityField,
    pub potential: PotentialField,
    pub sigma: f64,
    pub phi: f64,
    pub tail: TailModel,
    pub trace: Vec<IterationRecord>,
    pub residuals: StationaryResiduals,
}

impl StationaryState {
    pub fn ensemble(&self) -> Result<EnsembleState> {
        EnsembleState::new(
            self.lattice,
            self.fields.clone(),
            self.occupations.clone(),
            self.geometry,
            self.convention,
        )
    }

    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }
}

/// Everything derived from one potential.
struct Evaluation {
    v: PotentialField,
    mu: Vec<f64>,
    fields: Vec<SpectralField>,
    occupations: Vec<f64>,
    sigma: f64,
    phi: f64,
    density: DensityField,
    target: Vec<f64>,
    residual_v: f64,
    residual_lambda: f64,
}

impl Evaluation {
    fn residual(&self) -> Vec<f64> {
        self.target.iter().zip(self.v.values()).map(|(t, v)| t - v).collect()
    }
}

struct Scf<'a> {
    config: &'a ScfConfig,
    lattice: FrequencyLattice,
    problem: DualProblem<'a>,
    fft: Fft3,
}

impl<'a> Scf<'a> {
    fn evaluate(&self, v: PotentialField) -> Result<Evaluation> {
        let c = self.config;
        let h = build_hamiltonian(&v, c.n, &c.geometry, c.convention)?;
        let eig = eigensolve(&h, self.problem.k_max())?;
        let cf: &dyn Casimir = &c.casimir;
        let sigma = solve_sigma(&eig.values, &self.problem.tail, cf, c.lambda_total)?;
        let phi = self.problem.phi_from_spectrum(&v, &eig.values, sigma)?;

        let mut fields = Vec::new();
        let mut occupations = Vec::new();
        for (m, u) in eig.values.iter().zip(eig.vectors) {
            let l = cf.f(m + sigma);
            if l < c.lambda_tol {
                break;
            }
            fields.push(u);
            occupations.push(l);
        }
        let state = EnsembleState::unchecked(self.lattice, fields, occupations, c.geometry, c.convention)?;
        let density = density_on(&state, &self.fft)?;
        let target: Vec<f64> = density.values().iter().map(|r| c.alpha.pow(*r)).collect();
        let residual_v = target
            .iter()
            .zip(v.values())
            .fold(0.0f64, |m, (t, x)| m.max((t - x).abs()));
        let retained: f64 = state.occupations().iter().sum();
        let residual_lambda = (retained + self.problem.tail.f_tail(cf, sigma) - c.lambda_total).abs();
        let (fields, occupations) = state.into_parts();
        Ok(Evaluation {
            v,
            mu: eig.values,
            fields,
            occupations,
            sigma,
            phi,
            density,
            target,
            residual_v,
            residual_lambda,
        })
    }

    fn converged(&self, e: &Evaluation) -> bool {
        e.residual_v <= self.config.tol_v && e.residual_lambda <= self.config.tol_lambda
    }
}

/// Solves `min ||r - sum_j gamma_j dr_j||` through the normal equations.
fn anderson_coefficients(r: &[f64], dr: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = dr.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            a[i * m + j] = dot(&dr[i], &dr[j]);
        }
        b[i] = dot(&dr[i], r);
    }
    let scale = (0..m).map(|i| a[i * m + i]).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for i in 0..m {
        a[i * m + i] += 1e-12 * scale;
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..m {
        let piv = (col..m).max_by(|&x, &y| a[x * m + col].abs().total_cmp(&a[y * m + col].abs()))?;
        if a[piv * m + col] == 0.0 {
            return None;
        }
        for k in 0..m {
            a.swap(col * m + k, piv * m + k);
        }
        b.swap(col, piv);
        for row in col + 1..m {
            let f = a[row * m + col] / a[col * m + col];
            for k in col..m {
                a[row * m + k] -= f * a[col * m + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|k| a[i * m + k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i * m + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Self-consistent iteration `V <- mix(V, rho_V^alpha)` with `Phi` as merit
/// function: a step that lowers `Phi` is retried with half the mixing.
pub fn scf_solve(config: &ScfConfig) -> Result<StationaryState> {
    config.validate()?;
    let lattice = FrequencyLattice::new(config.n)?;
    let g = config.grid_size()?;
    let scf = Scf {
        config,
        lattice,
        problem: DualProblem::new(
            &config.casimir,
            config.lambda_total,
            config.alpha,
            config.n,
            config.k_max(),
            config.geometry,
            config.convention,
        )?,
        fft: Fft3::new(g),
    };
    let v0 = match &config.initial_v {
        Some(v) => v.clone(),
        None => PotentialField::constant(g, config.alpha.pow(config.lambda_total))?,
    };
    let mut cur = scf.evaluate(v0)?;
    let record = |iteration, e: &Evaluation, mixing, anderson, backtracks| IterationRecord {
        iteration,
        phi: e.phi,
        sigma: e.sigma,
        residual_v: e.residual_v,
        residual_lambda: e.residual_lambda,
        mixing,
        anderson,
        backtracks,
    };
    let mut trace = vec![record(0, &cur, 0.0, false, 0)];
    // (V, residual) of previous accepted iterates, for Anderson.
    let mut history: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();

    let mut iteration = 0;
    while !scf.converged(&cur) {
        if iteration == config.max_iter {
            return Err(Error::MaxIterations {
                iterations: iteration,
                residual: cur.residual_v.max(cur.residual_lambda),
            });
        }
        iteration += 1;
        let r = cur.residual();
        let mut eta = config.mixing;
        let mut use_anderson = config.anderson_depth > 0 && !history.is_empty();
        let mut backtracks = 0;
        let next = loop {
            let mut step: Vec<f64> = cur.v.values().iter().zip(&r).map(|(v, ri)| v + eta * ri).collect();
            if use_anderson {
                let dv: Vec<Vec<f64>> = history
                    .iter()
                    .map(|(hv, _)| cur.v.values().iter().zip(hv).map(|(a, b)| a - b).collect())
                    .collect();
                let dr: Vec<Vec<f64>> = history
                    .iter()
                    .map(|(_, hr)| r.iter().zip(hr).map(|(a, b)| a - b).collect())
                    .collect();
                match anderson_coefficients(&r, &dr) {
                    Some(gamma) => {
                        for (j, gj) in gamma.iter().enumerate() {
                            for (i, s) in step.iter_mut().enumerate() {
                                *s -= gj * (dv[j][i] + eta * dr[j][i]);
                            }
                        }
                    }
                    None => use_anderson = false,
                }
            }
            let cand = scf.evaluate(PotentialField::clamped(RealGrid::new(g, step)?)?)?;
            let drop = cur.phi - cand.phi;
            if drop <= PHI_SLACK * cur.phi.abs().max(1.0) {
                break cand;
            }
            backtracks += 1;
            if use_anderson {
                use_anderson = false;
                history.clear();
            } else {
                eta *= 0.5;
                if eta < MIN_MIXING {
                    return Err(Error::DualDecrease { decrease: drop });
                }
            }
        };
        history.push((cur.v.values().to_vec(), r));
        if history.len() > config.anderson_depth {
            history.remove(0);
        }
        trace.push(record(iteration, &next, eta, use_anderson, backtracks));
        cur = next;
    }

    let mut st = StationaryState {
        lattice,
        geometry: config.geometry,
        convention: config.convention,
        alpha: config.alpha,
        lambda_total: config.lambda_total,
        casimir: config.casimir,
        fields: cur.fields,
        occupations: cur.occupations,
        energies: cur.mu,
        density: cur.density,
        potential: cur.v,
        sigma: cur.sigma,
        phi: cur.phi,
        tail: scf.problem.tail,
        trace,
        residuals: StationaryResiduals::default(),
    };
    st.residuals = verify_stationary(&st, &config.casimir, config.alpha)?;
    Ok(st)
}

/// Total occupation implied by a spectrum and shift, tail included.
pub fn implied_total(st: &StationaryState) -> f64 {
    occupation_sum(&st.energies, &st.tail, &st.casimir, st.sigma)
}
