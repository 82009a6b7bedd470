use serde::Serialize;

use crate::casimir::Casimir;
use crate::error::{Error, Result};
use crate::numerics::integrate_to_infinity;
use crate::torus::{Convention, TorusGeometry};

/// Terms of a tail series summed one by one before switching to an integral.
const EXPLICIT_TERMS: usize = 4096;

/// The lowest `count` eigenvalues of `-Delta` on the torus, by enumerating
/// lattice points in growing ellipsoids.
pub fn free_spectrum(geometry: &TorusGeometry, convention: Convention, count: usize) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    let scale = convention.scale();
    let theta = geometry.theta();
    let mut radius = scale * (count as f64).powf(2.0 / 3.0);
    loop {
        let bound = |t: f64| (radius / (scale * t)).sqrt().floor() as i64;
        let (b0, b1, b2) = (bound(theta[0]), bound(theta[1]), bound(theta[2]));
        let mut values = Vec::new();
        for x in -b0..=b0 {
            for y in -b1..=b1 {
                for z in -b2..=b2 {
                    let s = geometry.laplacian_symbol([x, y, z], convention);
                    if s <= radius {
                        values.push(s);
                    }
                }
            }
        }
        if values.len() >= count {
            values.sort_by(f64::total_cmp);
            values.truncate(count);
            return values;
        }
        radius *= 2.0;
    }
}

/// `min mu_k / k^{2/3}` over `k` in `[2, k_hi]` (1-based); `k = 1` carries the
/// zero eigenvalue and is excluded.
pub fn li_yau_constant(spectrum: &[f64], k_hi: usize) -> f64 {
    spectrum
        .iter()
        .enumerate()
        .skip(1)
        .take(k_hi.saturating_sub(1))
        .map(|(i, mu)| mu / ((i + 1) as f64).powf(2.0 / 3.0))
        .fold(f64::INFINITY, f64::min)
}

/// Minorant `mu_k >= c k^{2/3}` used for the eigenvalues beyond `k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailModel {
    pub c: f64,
    pub k_max: usize,
}

/// Truncation record of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceTail {
    pub k_max: usize,
    pub tail_bound: f64,
}

/// `sum_{k >= k0} h(k)` for nonincreasing nonnegative `h`; the part beyond the
/// explicit terms is bounded by the integral from the last summed index.
fn tail_series(h: impl Fn(f64) -> f64, k0: usize) -> f64 {
    let mut sum = 0.0;
    let end = k0 + EXPLICIT_TERMS;
    for k in k0..=end {
        let t = h(k as f64);
        if t == 0.0 {
            return sum;
        }
        sum += t;
    }
    let x0 = end as f64;
    // x = x0 e^t turns a power-law tail into an exponential one.
    sum + integrate_to_infinity(
        |t| {
            let x = x0 * t.exp();
            h(x) * x
        },
        0.0,
        1e-15 * (1.0 + sum),
    )
}

impl TailModel {
    /// Calibrates `c` on the first `k_max` free eigenvalues.
    pub fn calibrate(geometry: &TorusGeometry, convention: Convention, k_max: usize) -> Self {
        let spec = free_spectrum(geometry, convention, k_max.max(2));
        Self {
            c: li_yau_constant(&spec, spec.len()),
            k_max,
        }
    }

    /// A model that contributes nothing.
    pub fn none(k_max: usize) -> Self {
        Self {
            c: f64::INFINITY,
            k_max,
        }
    }

    fn minorant(&self, k: f64) -> f64 {
        self.c * k.powf(2.0 / 3.0)
    }

    /// `sum_{k > k_max} f(c k^{2/3} + sigma)`.
    pub fn f_tail(&self, cf: &dyn Casimir, sigma: f64) -> f64 {
        if self.c.is_infinite() {
            return 0.0;
        }
        tail_series(|k| cf.f(self.minorant(k) + sigma), self.k_max + 1)
    }

    /// `sum_{k > k_max} F(c k^{2/3} + sigma)`.
    pub fn big_f_tail(&self, cf: &dyn Casimir, sigma: f64) -> f64 {
        if self.c.is_infinite() {
            return 0.0;
        }
        tail_series(|k| cf.big_f(self.minorant(k) + sigma), self.k_max + 1)
    }
}

/// `sum_k F(mu_k + sigma)` plus the modelled tail.
pub fn trace_from_spectrum(mu: &[f64], sigma: f64, cf: &dyn Casimir, tail: &TailModel) -> Result<(f64, TraceTail)> {
    if mu.len() > tail.k_max {
        return Err(Error::SizeMismatch(format!(
            "{} eigenvalues for a tail model starting after {}",
            mu.len(),
            tail.k_max
        )));
    }
    let value = mu.iter().map(|m| cf.big_f(m + sigma)).sum();
    Ok((
        value,
        TraceTail {
            k_max: tail.k_max,
            tail_bound: tail.big_f_tail(cf, sigma),
        },
    ))
}
