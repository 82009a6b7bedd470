use crate::error::{Error, Result};
use crate::torus::RealGrid;

/// Entries below this are rejected as negative potentials; entries in
/// `[-NEGATIVE_SLACK, 0)` are treated as round-off and kept.
pub const NEGATIVE_SLACK: f64 = 1e-12;

/// A nonnegative potential `V(x)` sampled on a collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    grid: RealGrid,
}

impl PotentialField {
    pub fn new(grid: RealGrid) -> Result<Self> {
        if let Some(&v) = grid
            .values()
            .iter()
            .find(|v| !(v.is_finite() && **v >= -NEGATIVE_SLACK))
        {
            return Err(Error::OutOfDomain {
                what: "potential value",
                value: v,
            });
        }
        Ok(Self { grid })
    }

    /// Negative entries are clamped to zero.
    pub fn clamped(mut grid: RealGrid) -> Result<Self> {
        for v in grid.values_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Self::new(grid)
    }

    pub fn constant(size: usize, value: f64) -> Result<Self> {
        Self::new(RealGrid::constant(size, value))
    }

    pub fn zero(size: usize) -> Self {
        Self {
            grid: RealGrid::constant(size, 0.0),
        }
    }

    pub fn grid(&self) -> &RealGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        self.grid.values()
    }

    pub fn size(&self) -> usize {
        self.grid.size()
    }

    pub fn into_grid(self) -> RealGrid {
        self.grid
    }

    /// `int V^q dx` on the grid.
    pub fn integral_pow(&self, q: f64) -> f64 {
        self.grid.values().iter().map(|v| v.max(0.0).powf(q)).sum::<f64>() / self.grid.values().len() as f64
    }

    pub fn max_abs_diff(&self, other: &PotentialField) -> f64 {
        self.grid.max_abs_diff(&other.grid)
    }
}
