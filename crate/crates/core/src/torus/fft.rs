//! Coefficient <-> collocation-grid transforms on the unit coordinate cube.
//!
//! A grid of linear size `G` samples `x_m = m / G`, `m in {0..G-1}^3`, stored
//! row-major with the third axis contiguous. Synthesis evaluates
//! `u(x_m) = sum_xi c(xi) e^{2 pi i xi.x_m}`; analysis returns
//! `c(xi) = G^{-3} sum_m u(x_m) e^{-2 pi i xi.x_m}` restricted to a lattice.
//! Both directions skip the 1-D transforms whose input or output lies
//! entirely outside the lattice, which matters for zero-padded grids.

use std::cell::RefCell;
use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::SpectralField;
use super::lattice::FrequencyLattice;
use crate::error::{Error, Result};

static PLANNER: LazyLock<Mutex<FftPlanner<f64>>> = LazyLock::new(|| Mutex::new(FftPlanner::new()));

thread_local! {
    // Line block and FFT scratch, reused across calls.
    static WORK: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex samples on a uniform `G^3` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    size: usize,
    values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn new(size: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != size.pow(3) {
            return Err(Error::SizeMismatch(format!(
                "grid of size {size} needs {} values, got {}",
                size.pow(3),
                values.len()
            )));
        }
        Ok(Self { size, values })
    }

    pub fn from_fn(size: usize, mut f: impl FnMut([f64; 3]) -> Complex64) -> Self {
        let h = 1.0 / size as f64;
        let mut values = Vec::with_capacity(size.pow(3));
        for a in 0..size {
            for b in 0..size {
                for c in 0..size {
                    values.push(f([a as f64 * h, b as f64 * h, c as f64 * h]));
                }
            }
        }
        Self { size, values }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `int |u|^2 dx`, with the coordinate torus of unit volume.
    pub fn mean_norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64
    }
}

/// Real samples on a uniform `G^3` grid (densities, potentials).
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    size: usize,
    values: Vec<f64>,
}

impl RealGrid {
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != size.pow(3) {
            return Err(Error::SizeMismatch(format!(
                "grid of size {size} needs {} values, got {}",
                size.pow(3),
                values.len()
            )));
        }
        Ok(Self { size, values })
    }

    pub fn constant(size: usize, value: f64) -> Self {
        Self {
            size,
            values: vec![value; size.pow(3)],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `int g dx` as the grid average.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `int |g|^p dx`.
    pub fn integral_pow(&self, p: f64) -> f64 {
        let sum: f64 = if p == 2.0 {
            self.values.iter().map(|v| v * v).sum()
        } else if p == 3.0 {
            self.values.iter().map(|v| v.abs() * v * v).sum()
        } else {
            self.values.iter().map(|v| v.abs().powf(p)).sum()
        };
        sum / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &RealGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealGrid {
        RealGrid {
            size: self.size,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Planned 3-D transforms for one grid size.
#[derive(Clone)]
pub struct Fft3 {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("size", &self.size).finish()
    }
}

impl Fft3 {
    pub fn new(size: usize) -> Self {
        assert!(size > 0, "grid size must be positive");
        let mut planner = PLANNER.lock().unwrap_or_else(|e| e.into_inner());
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        Self { size, forward, inverse }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.size.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_lattice(&self, lattice: FrequencyLattice) -> Result<()> {
        if lattice.width() > self.size {
            return Err(Error::SizeMismatch(format!(
                "grid size {} cannot resolve lattice N={} (needs at least {})",
                self.size,
                lattice.n(),
                lattice.width()
            )));
        }
        Ok(())
    }

    fn active(&self, n: usize) -> Vec<usize> {
        let g = self.size as i64;
        (-(n as i64)..=n as i64).map(|x| x.rem_euclid(g) as usize).collect()
    }

    /// Evaluate coefficients given in lattice order on the grid.
    ///
    /// The slow axes are transformed first, while only lattice lines are
    /// nonzero; the dense last pass runs over contiguous lines.
    pub fn synthesize_into(
        &self,
        lattice: FrequencyLattice,
        coeffs: &[Complex64],
        out: &mut Vec<Complex64>,
    ) -> Result<()> {
        self.check_lattice(lattice)?;
        if coeffs.len() != lattice.len() {
            return Err(Error::SizeMismatch("coefficient count does not match lattice".into()));
        }
        let g = self.size;
        let g2 = g * g;
        if out.len() != g2 * g {
            out.clear();
            out.resize(g2 * g, ZERO);
        }
        let act = self.active(lattice.n());
        let w = lattice.width();
        let idle = self.idle(&act);
        WORK.with(|cell| {
            let (block, scratch) = &mut *cell.borrow_mut();
            block.clear();
            block.resize(w * g, ZERO);
            scratch.resize(self.inverse.get_inplace_scratch_len(), ZERO);
            // first axis, for every lattice (b, c)
            for (bi, &mb) in act.iter().enumerate() {
                block.fill(ZERO);
                for (ai, &ma) in act.iter().enumerate() {
                    let src = &coeffs[(ai * w + bi) * w..(ai * w + bi + 1) * w];
                    for (ci, z) in src.iter().enumerate() {
                        block[ci * g + ma] = *z;
                    }
                }
                self.inverse.process_with_scratch(block, scratch);
                for (ci, &mc) in act.iter().enumerate() {
                    for a in 0..g {
                        out[(a * g + mb) * g + mc] = block[ci * g + a];
                    }
                }
            }
            // second axis, for every a and lattice c
            for plane in out.chunks_exact_mut(g2) {
                block.fill(ZERO);
                for &mb in &act {
                    for (ci, &mc) in act.iter().enumerate() {
                        block[ci * g + mb] = plane[mb * g + mc];
                    }
                }
                self.inverse.process_with_scratch(block, scratch);
                for (ci, &mc) in act.iter().enumerate() {
                    for b in 0..g {
                        plane[b * g + mc] = block[ci * g + b];
                    }
                }
            }
            // last axis over all lines
            for line in out.chunks_exact_mut(g) {
                for &c in &idle {
                    line[c] = ZERO;
                }
            }
            self.inverse.process_with_scratch(out, scratch);
        });
        Ok(())
    }

    fn idle(&self, act: &[usize]) -> Vec<usize> {
        let mut used = vec![false; self.size];
        for &m in act {
            used[m] = true;
        }
        (0..self.size).filter(|&m| !used[m]).collect()
    }

    /// Forward-transform `grid` in place and gather the normalized lattice
    /// coefficients into `out`. The grid contents are destroyed.
    pub fn analyze_into(&self, grid: &mut [Complex64], lattice: FrequencyLattice, out: &mut [Complex64]) -> Result<()> {
        self.check_lattice(lattice)?;
        if grid.len() != self.len() || out.len() != lattice.len() {
            return Err(Error::SizeMismatch("grid or output length does not match".into()));
        }
        let g = self.size;
        let g2 = g * g;
        let act = self.active(lattice.n());
        let w = lattice.width();
        let scale = 1.0 / (g2 * g) as f64;
        WORK.with(|cell| {
            let (block, scratch) = &mut *cell.borrow_mut();
            block.clear();
            block.resize(w * g, ZERO);
            scratch.resize(self.forward.get_inplace_scratch_len(), ZERO);
            self.forward.process_with_scratch(grid, scratch);
            for plane in grid.chunks_exact_mut(g2) {
                for (ci, &mc) in act.iter().enumerate() {
                    for b in 0..g {
                        block[ci * g + b] = plane[b * g + mc];
                    }
                }
                self.forward.process_with_scratch(block, scratch);
                for &mb in &act {
                    for (ci, &mc) in act.iter().enumerate() {
                        plane[mb * g + mc] = block[ci * g + mb];
                    }
                }
            }
            for (bi, &mb) in act.iter().enumerate() {
                for (ci, &mc) in act.iter().enumerate() {
                    for a in 0..g {
                        block[ci * g + a] = grid[(a * g + mb) * g + mc];
                    }
                }
                self.forward.process_with_scratch(block, scratch);
                for (ai, &ma) in act.iter().enumerate() {
                    let dst = &mut out[(ai * w + bi) * w..(ai * w + bi + 1) * w];
                    for (ci, d) in dst.iter_mut().enumerate() {
                        *d = block[ci * g + ma] * scale;
                    }
                }
            }
        });
        Ok(())
    }

    pub fn synthesize(&self, field: &SpectralField) -> Result<Vec<Complex64>> {
        let mut out = Vec::new();
        self.synthesize_into(field.lattice(), field.coeffs(), &mut out)?;
        Ok(out)
    }

    pub fn analyze(&self, mut grid: Vec<Complex64>, lattice: FrequencyLattice) -> Result<SpectralField> {
        let mut out = vec![ZERO; lattice.len()];
        self.analyze_into(&mut grid, lattice, &mut out)?;
        SpectralField::from_coeffs(lattice, out)
    }

    /// Lattice coefficients of a real grid function.
    pub fn analyze_real(&self, grid: &RealGrid, lattice: FrequencyLattice) -> Result<Vec<Complex64>> {
        if grid.size() != self.size {
            return Err(Error::SizeMismatch("real grid size does not match plan".into()));
        }
        let mut buf: Vec<Complex64> = grid.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut out = vec![ZERO; lattice.len()];
        self.analyze_into(&mut buf, lattice, &mut out)?;
        Ok(out)
    }
}

/// Direction of [`transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToGrid,
    ToCoeffs,
}

/// Either side of a transform pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Coeffs(SpectralField),
    Grid(ComplexGrid),
}

/// Change of basis between coefficients and grid samples.
///
/// `ToGrid` needs `grid_size`; `ToCoeffs` needs the target lattice.
pub fn transform(
    input: &Representation,
    direction: Direction,
    grid_size: Option<usize>,
    lattice: Option<FrequencyLattice>,
) -> Result<Representation> {
    match (input, direction) {
        (Representation::Coeffs(field), Direction::ToGrid) => {
            let g = grid_size.ok_or_else(|| Error::invalid("grid_size", "required for ToGrid"))?;
            to_grid(field, g).map(Representation::Grid)
        }
        (Representation::Grid(grid), Direction::ToCoeffs) => {
            let lat = lattice.ok_or_else(|| Error::invalid("lattice", "required for ToCoeffs"))?;
            to_coeffs(grid, lat).map(Representation::Coeffs)
        }
        (Representation::Coeffs(_), Direction::ToCoeffs) => Ok(input.clone()),
        (Representation::Grid(_), Direction::ToGrid) => Ok(input.clone()),
    }
}

pub fn to_grid(field: &SpectralField, grid_size: usize) -> Result<ComplexGrid> {
    if grid_size == 0 {
        return Err(Error::invalid("grid_size", "must be positive"));
    }
    let fft = Fft3::new(grid_size);
    let values = fft.synthesize(field)?;
    Ok(ComplexGrid {
        size: grid_size,
        values,
    })
}

pub fn to_coeffs(grid: &ComplexGrid, lattice: FrequencyLattice) -> Result<SpectralField> {
    let fft = Fft3::new(grid.size);
    fft.analyze(grid.values.clone(), lattice)
}

/// Linear size of a grid padded by `ratio` relative to the lattice width.
pub fn padded_size(lattice: FrequencyLattice, ratio: usize) -> usize {
    ratio.max(1) * lattice.width()
}

/// Smallest integer `>= min` whose prime factors are all at most 7.
pub fn smooth_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5, 7] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_field(lat: FrequencyLattice, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralField::from_fn(lat, |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn constant_grid_gives_zero_mode() {
        let lat = FrequencyLattice::new(2).unwrap();
        let grid = ComplexGrid::from_fn(7, |_| Complex64::new(0.3, -0.2));
        let f = to_coeffs(&grid, lat).unwrap();
        for (i, c) in f.coeffs().iter().enumerate() {
            let expect = if i == lat.center() {
                Complex64::new(0.3, -0.2)
            } else {
                ZERO
            };
            assert!((c - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn sampled_plane_wave_is_unit_coefficient() {
        let lat = FrequencyLattice::new(3).unwrap();
        let grid = ComplexGrid::from_fn(10, |x| Complex64::from_polar(1.0, 2.0 * PI * x[0]));
        let f = to_coeffs(&grid, lat).unwrap();
        let idx = lat.index_of([1, 0, 0]).unwrap();
        for (i, c) in f.coeffs().iter().enumerate() {
            let expect = if i == idx { 1.0 } else { 0.0 };
            assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn synthesis_matches_direct_sum() {
        let lat = FrequencyLattice::new(1).unwrap();
        let f = random_field(lat, 3);
        let g = to_grid(&f, 4).unwrap();
        let x = [2.0 / 4.0, 1.0 / 4.0, 3.0 / 4.0];
        let direct: Complex64 = lat
            .points()
            .zip(f.coeffs())
            .map(|(xi, c)| {
                let ph = 2.0 * PI * (xi[0] as f64 * x[0] + xi[1] as f64 * x[1] + xi[2] as f64 * x[2]);
                c * Complex64::from_polar(1.0, ph)
            })
            .sum();
        let v = g.values()[(2 * 4 + 1) * 4 + 3];
        assert!((v - direct).norm() < 1e-13);
    }

    #[test]
    fn roundtrip_and_parseval() {
        let lat = FrequencyLattice::new(4).unwrap();
        let f = random_field(lat, 11);
        for g in [9, 12, 18, 27] {
            let grid = to_grid(&f, g).unwrap();
            let back = to_coeffs(&grid, lat).unwrap();
            let err = back.max_abs_diff(&f) / f.max_abs();
            assert!(err < 1e-12, "size {g}: {err}");
            assert!((grid.mean_norm_sqr() - f.norm_sqr()).abs() < 1e-12 * f.norm_sqr());
        }
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(1), 1);
        assert_eq!(smooth_size(11), 12);
        assert_eq!(smooth_size(35), 35);
        assert_eq!(smooth_size(41), 42);
        assert_eq!(smooth_size(65), 70);
    }

    #[test]
    fn undersized_grid_is_rejected() {
        let lat = FrequencyLattice::new(4).unwrap();
        assert!(matches!(
            to_grid(&SpectralField::zeros(lat), 8),
            Err(Error::SizeMismatch(_))
        ));
        let grid = ComplexGrid::from_fn(5, |_| ZERO);
        assert!(to_coeffs(&grid, lat).is_err());
        assert!(ComplexGrid::new(3, vec![ZERO; 26]).is_err());
    }
}
