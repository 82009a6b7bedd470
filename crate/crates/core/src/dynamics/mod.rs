//! Strang-split time evolution of the system and conservation observers.

mod series;

pub use series::{Sample, TimeSeries, CSV_HEADER};

use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::casimir::Casimir;
use crate::ensemble::{
    accumulate_density, density_on, energy_from_density, kinetic_energy, mass, DensityField, EnsembleState,
};
use crate::error::{Error, Result};
use crate::model::{Alpha, Coupling};
use crate::torus::{padded_size, symbol_table, Fft3, FrequencyLattice, SpectralField};

/// Coefficient magnitude treated as blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

/// Complex grid values kept in memory at once during a nonlinear substep.
const MAX_HELD_GRID: usize = 1 << 23;

/// Grid points per block in the fused density and phase pass.
const PHASE_BLOCK: usize = 2048;

/// Time stepping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub steps: usize,
    pub alpha: Alpha,
    pub coupling: Coupling,
    /// Observers run every `cadence` steps, and after the last step.
    pub cadence: usize,
    /// Grid padding of the nonlinear substep.
    pub padding_ratio: usize,
}

impl EvolutionConfig {
    pub fn new(dt: f64, steps: usize, alpha: Alpha, coupling: Coupling) -> Self {
        Self {
            dt,
            steps,
            alpha,
            coupling,
            cadence: 1,
            padding_ratio: alpha.default_padding(),
        }
    }

    pub fn with_cadence(mut self, cadence: usize) -> Self {
        self.cadence = cadence;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("{} is not a positive number", self.dt)));
        }
        if self.cadence == 0 {
            return Err(Error::invalid("cadence", "must be at least 1"));
        }
        if self.padding_ratio == 0 {
            return Err(Error::invalid("padding_ratio", "must be at least 1"));
        }
        Ok(())
    }
}

/// Optional observers beyond mass, energy, `H^1_lambda` and Gram deviation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Observers<'a> {
    /// Records `H_f` with this Casimir function.
    pub casimir: Option<&'a dyn Casimir>,
    /// Records `||rho - rho_ref||_{L^{alpha+1}}`; must live on the grid padded by `alpha + 1`.
    pub reference: Option<&'a DensityField>,
}

/// Precomputed pieces of one Strang step.
struct Propagator {
    lattice: FrequencyLattice,
    occupations: Vec<f64>,
    half_phase: Vec<Complex64>,
    fft: Fft3,
    alpha: Alpha,
    coupling: Coupling,
    dt: f64,
    /// Grid buffers reused across steps.
    grids: Mutex<Vec<Vec<Complex64>>>,
}

impl Propagator {
    fn new(state: &EnsembleState, dt: f64, alpha: Alpha, coupling: Coupling, padding_ratio: usize) -> Self {
        let lattice = state.lattice();
        let half_phase = symbol_table(lattice, state.geometry(), state.convention())
            .into_iter()
            .map(|s| Complex64::from_polar(1.0, -0.5 * dt * s))
            .collect();
        Self {
            lattice,
            occupations: state.occupations().to_vec(),
            half_phase,
            fft: Fft3::new(padded_size(lattice, padding_ratio)),
            alpha,
            coupling,
            dt,
            grids: Mutex::new(Vec::new()),
        }
    }

    fn linear(&self, fields: &mut [SpectralField]) {
        fields.par_iter_mut().for_each(|f| {
            for (c, p) in f.coeffs_mut().iter_mut().zip(&self.half_phase) {
                *c *= p;
            }
        });
    }

    fn phase(&self, rho: f64) -> Complex64 {
        Complex64::from_polar(1.0, -self.coupling.sign() * self.alpha.pow(rho) * self.dt)
    }

    fn multiply_and_truncate(
        &self,
        grid: &mut [Complex64],
        phase: &[Complex64],
        field: &mut SpectralField,
    ) -> Result<()> {
        for (g, p) in grid.iter_mut().zip(phase) {
            *g *= p;
        }
        self.fft.analyze_into(grid, self.lattice, field.coeffs_mut())
    }

    /// Multiplies every grid by the phase of the common density, one
    /// cache-sized block of points at a time.
    fn apply_phase(&self, grids: &mut [Vec<Complex64>]) {
        let mut blocks: Vec<Vec<&mut [Complex64]>> = Vec::new();
        for g in grids.iter_mut() {
            for (k, c) in g.chunks_mut(PHASE_BLOCK).enumerate() {
                if k == blocks.len() {
                    blocks.push(Vec::new());
                }
                blocks[k].push(c);
            }
        }
        blocks.par_iter_mut().for_each(|cols| {
            let mut rho = vec![0.0; cols[0].len()];
            for (c, &l) in cols.iter().zip(&self.occupations) {
                if l > 0.0 {
                    for (r, z) in rho.iter_mut().zip(c.iter()) {
                        *r += l * z.norm_sqr();
                    }
                }
            }
            let phase: Vec<Complex64> = rho.iter().map(|r| self.phase(*r)).collect();
            for c in cols.iter_mut() {
                for (z, p) in c.iter_mut().zip(&phase) {
                    *z *= p;
                }
            }
        });
    }

    fn nonlinear(&self, fields: &mut [SpectralField]) -> Result<()> {
        if self.dt == 0.0 || self.occupations.iter().all(|l| *l == 0.0) {
            return Ok(());
        }
        let len = self.fft.len();
        if fields.len() * len <= MAX_HELD_GRID {
            let mut grids = self.grids.lock().unwrap_or_else(|e| e.into_inner());
            grids.resize_with(fields.len(), Vec::new);
            grids
                .par_iter_mut()
                .zip(fields.par_iter())
                .try_for_each(|(g, f)| self.fft.synthesize_into(self.lattice, f.coeffs(), g))?;
            self.apply_phase(&mut grids);
            grids
                .par_iter_mut()
                .zip(fields.par_iter_mut())
                .try_for_each(|(g, f)| self.fft.analyze_into(g, self.lattice, f.coeffs_mut()))
        } else {
            let state = EnsembleState::unchecked(
                self.lattice,
                fields.to_vec(),
                self.occupations.clone(),
                Default::default(),
                Default::default(),
            )?;
            let mut rho = vec![0.0; len];
            accumulate_density(&state, &self.fft, &mut rho)?;
            let phase: Vec<Complex64> = rho.iter().map(|r| self.phase(*r)).collect();
            let batch = (MAX_HELD_GRID / len).max(1);
            for chunk in fields.chunks_mut(batch) {
                chunk.par_iter_mut().try_for_each(|f| {
                    let mut g = Vec::new();
                    self.fft.synthesize_into(self.lattice, f.coeffs(), &mut g)?;
                    self.multiply_and_truncate(&mut g, &phase, f)
                })?;
            }
            Ok(())
        }
    }

    fn step(&self, fields: &mut [SpectralField]) -> Result<()> {
        self.linear(fields);
        self.nonlinear(fields)?;
        self.linear(fields);
        Ok(())
    }
}

/// Multiplies every field by `exp(-i sign rho^alpha dt)` on the grid padded by
/// `alpha + 1` and truncates back to the lattice. The phase is common to all
/// fields and unimodular, so `rho` itself does not change on the grid.
pub fn nonlinear_substep(state: &EnsembleState, dt: f64, alpha: Alpha, coupling: Coupling) -> Result<EnsembleState> {
    let p = Propagator::new(state, dt, alpha, coupling, alpha.default_padding());
    let mut fields = state.fields().to_vec();
    p.nonlinear(&mut fields)?;
    state.with_fields(fields)
}

/// Half free step, nonlinear step, half free step.
pub fn strang_step(state: &EnsembleState, dt: f64, alpha: Alpha, coupling: Coupling) -> Result<EnsembleState> {
    let p = Propagator::new(state, dt, alpha, coupling, alpha.default_padding());
    let mut fields = state.fields().to_vec();
    p.step(&mut fields)?;
    state.with_fields(fields)
}

fn blown_up(fields: &[SpectralField]) -> bool {
    fields.iter().any(|f| {
        f.coeffs()
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()) || c.norm_sqr() > BLOW_UP_THRESHOLD * BLOW_UP_THRESHOLD)
    })
}

struct Observer<'a> {
    config: &'a EvolutionConfig,
    observers: Observers<'a>,
    fft: Fft3,
    casimir_offset: Option<f64>,
}

impl<'a> Observer<'a> {
    fn new(state: &EnsembleState, config: &'a EvolutionConfig, observers: Observers<'a>) -> Result<Self> {
        let fft = Fft3::new(padded_size(state.lattice(), config.alpha.default_padding()));
        if let Some(r) = observers.reference {
            if r.size() != fft.size() {
                return Err(Error::SizeMismatch(format!(
                    "reference density grid {} != {}",
                    r.size(),
                    fft.size()
                )));
            }
        }
        let casimir_offset = match observers.casimir {
            Some(cf) => Some(
                state
                    .occupations()
                    .iter()
                    .map(|&l| if l == 0.0 { Ok(0.0) } else { cf.f_star(-l) })
                    .sum::<Result<f64>>()?,
            ),
            None => None,
        };
        Ok(Self {
            config,
            observers,
            fft,
            casimir_offset,
        })
    }

    fn sample(&self, state: &EnsembleState, step: usize) -> Result<(Sample, DensityField)> {
        let alpha = self.config.alpha;
        let rho = density_on(state, &self.fft)?;
        let m = mass(state);
        let energy = energy_from_density(state, &rho, alpha, self.config.coupling);
        let energy_casimir = self
            .casimir_offset
            .map(|off| off + 2.0 * energy_from_density(state, &rho, alpha, Coupling::Defocusing));
        let q = alpha.as_f64() + 1.0;
        let rho_dist = self.observers.reference.map(|r| {
            let s: f64 = rho
                .values()
                .iter()
                .zip(r.values())
                .map(|(a, b)| (a - b).abs().powf(q))
                .sum::<f64>()
                / rho.values().len() as f64;
            s.powf(1.0 / q)
        });
        Ok((
            Sample {
                step,
                t: step as f64 * self.config.dt,
                mass: m,
                energy,
                h1_lambda_sq: m + 2.0 * kinetic_energy(state),
                gram_dev: state.gram_matrix().deviation_from_identity(),
                energy_casimir,
                rho_dist,
            },
            rho,
        ))
    }
}

/// Runs `config.steps` Strang steps, sampling observers at the cadence.
/// The input is not modified. If the blow-up guard fires, the last valid
/// state is returned and `aborted_at` is set.
pub fn evolve(
    state: &EnsembleState,
    config: &EvolutionConfig,
    observers: Observers<'_>,
) -> Result<(EnsembleState, TimeSeries)> {
    evolve_with(state, config, observers, |_, _, _| Ok(()))
}

/// As [`evolve`], calling `hook` with each sample, the sampled state and its
/// density on the observer grid.
pub fn evolve_with(
    state: &EnsembleState,
    config: &EvolutionConfig,
    observers: Observers<'_>,
    mut hook: impl FnMut(&Sample, &EnsembleState, &DensityField) -> Result<()>,
) -> Result<(EnsembleState, TimeSeries)> {
    config.validate()?;
    let prop = Propagator::new(state, config.dt, config.alpha, config.coupling, config.padding_ratio);
    let obs = Observer::new(state, config, observers)?;
    let mut series = TimeSeries::default();
    let mut record = |s: &EnsembleState, step: usize, series: &mut TimeSeries| -> Result<()> {
        let (sample, rho) = obs.sample(s, step)?;
        hook(&sample, s, &rho)?;
        series.samples.push(sample);
        Ok(())
    };
    record(state, 0, &mut series)?;

    let mut current = state.clone();
    let mut fields = current.fields().to_vec();
    for step in 1..=config.steps {
        for (f, c) in fields.iter_mut().zip(current.fields()) {
            f.coeffs_mut().copy_from_slice(c.coeffs());
        }
        prop.step(&mut fields)?;
        if blown_up(&fields) {
            series.aborted_at = Some(step);
            return Ok((current, series));
        }
        current.swap_fields(&mut fields);
        if step % config.cadence == 0 || step == config.steps {
            record(&current, step, &mut series)?;
        }
    }
    Ok((current, series))
}

#[cfg(test)]
mod tests;
