use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The truncated frequency cube `{xi in Z^3 : |xi_i| <= N}`.
///
/// Points are ordered lexicographically in `(xi_1, xi_2, xi_3)`, each running
/// from `-N` to `N`. With this order the point `-xi` sits at index
/// `len - 1 - index(xi)`, and `xi = 0` sits at the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequencyLattice {
    n: usize,
}

impl FrequencyLattice {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "truncation radius must be positive"));
        }
        if n > 512 {
            return Err(Error::invalid(
                "n",
                format!("truncation radius {n} is unreasonably large"),
            ));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Points per axis, `2N + 1`.
    pub fn width(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        self.width().pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn center(&self) -> usize {
        (self.len() - 1) / 2
    }

    pub fn contains(&self, xi: [i64; 3]) -> bool {
        let n = self.n as i64;
        xi.iter().all(|x| x.abs() <= n)
    }

    pub fn index_of(&self, xi: [i64; 3]) -> Option<usize> {
        if !self.contains(xi) {
            return None;
        }
        let n = self.n as i64;
        let w = self.width();
        let [a, b, c] = xi.map(|x| (x + n) as usize);
        Some((a * w + b) * w + c)
    }

    pub fn point(&self, index: usize) -> [i64; 3] {
        debug_assert!(index < self.len());
        let w = self.width();
        let n = self.n as i64;
        let c = index % w;
        let b = (index / w) % w;
        let a = index / (w * w);
        [a as i64 - n, b as i64 - n, c as i64 - n]
    }

    /// Index of `-xi` given the index of `xi`.
    pub fn mirror(&self, index: usize) -> usize {
        self.len() - 1 - index
    }

    pub fn points(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}
