//! Scalar quadrature, root finding and 1-D maximization.

use crate::error::{Error, Result};

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(g: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (g(lm), g(rm));
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(g, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + adapt(g, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `g` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(g: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // Start from a fixed partition so narrow features are not missed.
    const PIECES: usize = 16;
    let h = (b - a) / PIECES as f64;
    (0..PIECES)
        .map(|i| {
            let (x0, x1) = (a + h * i as f64, a + h * (i + 1) as f64);
            let (f0, fm, f1) = (g(x0), g(0.5 * (x0 + x1)), g(x1));
            let whole = simpson(f0, fm, f1, x1 - x0);
            adapt(&g, x0, x1, f0, fm, f1, whole, tol / PIECES as f64, 40)
        })
        .sum()
}

/// `int_s^inf g` through `sigma = s + u / (1 - u)`; `g` must decay faster than `1/sigma`.
pub fn integrate_to_infinity(g: impl Fn(f64) -> f64, s: f64, tol: f64) -> f64 {
    let mapped = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - u;
        let v = g(s + u / w) / (w * w);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(mapped, 0.0, 1.0, tol)
}

/// Root of a strictly decreasing `h` (`h(s) = 0`), bracket grown geometrically
/// from `[-1, 1]` and refined by bisection until the bracket stops shrinking.
pub fn root_decreasing(h: impl Fn(f64) -> f64, what: &'static str) -> Result<f64> {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut grow = 0;
    while h(lo) < 0.0 {
        lo = lo * 2.0 - 1.0;
        grow += 1;
        if grow > 1100 || !lo.is_finite() {
            return Err(Error::Bracket(what));
        }
    }
    grow = 0;
    while h(hi) > 0.0 {
        hi = hi * 2.0 + 1.0;
        grow += 1;
        if grow > 1100 || !hi.is_finite() {
            return Err(Error::Bracket(what));
        }
    }
    bisect_decreasing(h, lo, hi)
}

/// Bisection on a bracket with `h(lo) >= 0 >= h(hi)`.
pub fn bisect_decreasing(h: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = h(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the maximum of a unimodal `h` on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_section_max(h: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut hc, mut hd) = (h(c), h(d));
    while (b - a).abs() > tol {
        if hc > hd {
            b = d;
            d = c;
            hd = hc;
            c = b - r * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + r * (b - a);
            hd = h(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, h(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_of_known_integrals() {
        assert!((integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-13) - 2.0).abs() < 1e-12);
        assert!((integrate_to_infinity(|x| (-x).exp(), 0.0, 1e-13) - 1.0).abs() < 1e-12);
        assert!((integrate_to_infinity(|x| (1.0 + x).powi(-3), 0.0, 1e-13) - 0.5).abs() < 1e-11);
    }

    #[test]
    fn roots_and_maxima() {
        let r = root_decreasing(|s| 5.0 - s, "test").unwrap();
        assert!((r - 5.0).abs() < 1e-14);
        let r = root_decreasing(|s| (-s).exp() - 1e-30, "test").unwrap();
        assert!((r - 30.0 * 10f64.ln()).abs() < 1e-12);
        assert!(root_decreasing(|_| 1.0, "test").is_err());
        let (x, v) = golden_section_max(|s| -(s - 0.3) * (s - 0.3) + 2.0, -5.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6 && (v - 2.0).abs() < 1e-15);
    }
}
