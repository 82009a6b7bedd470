//! Casimir functions `f`, their tails `F(s) = int_s^inf f` and the Legendre
//! transform `F*(y) = sup_s (y s - F(s))`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_to_infinity, root_decreasing};

/// Absolute tolerance of the generic quadrature and root finding.
pub const GENERIC_TOL: f64 = 1e-12;

/// Constants of the decay bound `f(s) <= C (1 + s)^{-5/2 - eps}` for `s >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayBound {
    pub c: f64,
    pub eps: f64,
}

/// A candidate Casimir function. Only `f` is required; the other maps fall
/// back to quadrature and bracketed root finding.
pub trait Casimir: fmt::Debug + Send + Sync {
    fn name(&self) -> String;

    fn f(&self, s: f64) -> f64;

    /// `F(s) = int_s^inf f`.
    fn big_f(&self, s: f64) -> f64 {
        integrate_to_infinity(|x| self.f(x), s, GENERIC_TOL)
    }

    /// The unique `s` with `f(s) = lambda`, for `lambda > 0`.
    fn f_inverse(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::OutOfDomain {
                what: "occupation for f^-1",
                value: lambda,
            });
        }
        root_decreasing(|s| self.f(s) - lambda, "f(s) = lambda")
    }

    /// `F*(y)`; finite for `y <= 0`, an out-of-domain error for `y > 0`.
    fn f_star(&self, y: f64) -> Result<f64> {
        if y > 0.0 || y.is_nan() {
            return Err(Error::OutOfDomain {
                what: "Legendre transform argument",
                value: y,
            });
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let lambda = -y;
        let s = self.f_inverse(lambda)?;
        Ok(-lambda * s - self.big_f(s))
    }

    /// `(F*)'(y)`: the `s` with `-f(s) = y`, for `y < 0`.
    fn f_star_prime(&self, y: f64) -> Result<f64> {
        if !(y < 0.0) {
            return Err(Error::OutOfDomain {
                what: "derivative of Legendre transform at",
                value: y,
            });
        }
        self.f_inverse(-y)
    }

    /// Analytic constants of the decay bound, if known.
    fn decay_bound(&self) -> Option<DecayBound> {
        None
    }
}

/// `F*` extended by `+inf` on `y > 0`.
pub fn f_star_extended(cf: &dyn Casimir, y: f64) -> f64 {
    cf.f_star(y).unwrap_or(f64::INFINITY)
}

/// The shipped families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CasimirFunction {
    /// `f(s) = e^{-beta s}`.
    Boltzmann { beta: f64 },
    /// `f(s) = (1 + s)^{-p}` for `s >= 0`, `(1 - s)^r` for `s < 0`.
    ShiftedPower { p: f64, r: f64 },
}

impl CasimirFunction {
    pub fn boltzmann(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", format!("{beta} must be positive")));
        }
        Ok(Self::Boltzmann { beta })
    }

    /// Requires `p > 1` so that `F` is finite; class membership also needs
    /// `p > 5/2`, which [`validate_casimir`] checks.
    pub fn shifted_power(p: f64, r: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::invalid("p", format!("{p} must exceed 1")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid("r", format!("{r} must be positive")));
        }
        Ok(Self::ShiftedPower { p, r })
    }

    /// Reruns the constructor checks, for values that came through serde.
    pub fn checked(self) -> Result<Self> {
        match self {
            Self::Boltzmann { beta } => Self::boltzmann(beta),
            Self::ShiftedPower { p, r } => Self::shifted_power(p, r),
        }
    }
}

impl Casimir for CasimirFunction {
    fn name(&self) -> String {
        match *self {
            Self::Boltzmann { beta } => format!("boltzmann(beta={beta})"),
            Self::ShiftedPower { p, r } => format!("shifted_power(p={p}, r={r})"),
        }
    }

    fn f(&self, s: f64) -> f64 {
        match *self {
            Self::Boltzmann { beta } => (-beta * s).exp(),
            Self::ShiftedPower { p, r } => {
                if s >= 0.0 {
                    (1.0 + s).powf(-p)
                } else {
                    (1.0 - s).powf(r)
                }
            }
        }
    }

    fn big_f(&self, s: f64) -> f64 {
        match *self {
            Self::Boltzmann { beta } => (-beta * s).exp() / beta,
            Self::ShiftedPower { p, r } => {
                let f0 = 1.0 / (p - 1.0);
                if s >= 0.0 {
                    (1.0 + s).powf(1.0 - p) / (p - 1.0)
                } else {
                    f0 + ((1.0 - s).powf(r + 1.0) - 1.0) / (r + 1.0)
                }
            }
        }
    }

    fn f_inverse(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::OutOfDomain {
                what: "occupation for f^-1",
                value: lambda,
            });
        }
        Ok(match *self {
            Self::Boltzmann { beta } => -lambda.ln() / beta,
            Self::ShiftedPower { p, r } => {
                if lambda <= 1.0 {
                    lambda.powf(-1.0 / p) - 1.0
                } else {
                    1.0 - lambda.powf(1.0 / r)
                }
            }
        })
    }

    fn f_star(&self, y: f64) -> Result<f64> {
        if y > 0.0 || y.is_nan() {
            return Err(Error::OutOfDomain {
                what: "Legendre transform argument",
                value: y,
            });
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let lambda = -y;
        Ok(match *self {
            Self::Boltzmann { beta } => lambda / beta * (lambda.ln() - 1.0),
            Self::ShiftedPower { .. } => {
                let s = self.f_inverse(lambda)?;
                -lambda * s - self.big_f(s)
            }
        })
    }

    fn decay_bound(&self) -> Option<DecayBound> {
        Some(match *self {
            // max_{s>=0} e^{-beta s} (1+s)^3 sits at s = 3/beta - 1 when beta < 3.
            Self::Boltzmann { beta } => DecayBound {
                c: if beta >= 3.0 {
                    1.0
                } else {
                    (3.0 / beta).powi(3) * (beta - 3.0).exp()
                },
                eps: 0.5,
            },
            Self::ShiftedPower { p, .. } => DecayBound { c: 1.0, eps: p - 2.5 },
        })
    }
}

/// Outcome of one class condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCheck {
    pub condition: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CasimirReport {
    pub family: String,
    pub passed: bool,
    pub checks: Vec<ClassCheck>,
}

impl CasimirReport {
    pub fn failures(&self) -> Vec<&ClassCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn failed(&self, condition: &str) -> bool {
        self.checks.iter().any(|c| c.condition == condition && !c.passed)
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(move |i| lo + step * i as f64)
}

/// Sampled checks of the class conditions: (i) continuity and positivity,
/// (ii) strict decrease and divergence at `-inf`, (iii) the decay bound.
pub fn validate_casimir(cf: &dyn Casimir) -> CasimirReport {
    let mut checks = Vec::new();

    let mut bad = None;
    for s in grid(-10.0, 10.0, 1.0 / 16.0).chain([0.0, 1e-9, -1e-9]) {
        let v = cf.f(s);
        let h = 1e-9;
        let jump = (cf.f(s + h) - cf.f(s - h)).abs();
        if !(v.is_finite() && v > 0.0) {
            bad = Some(format!("f({s}) = {v} is not finite and positive"));
            break;
        }
        if !(jump <= 1e-6 * (1.0 + v)) {
            bad = Some(format!("jump {jump:e} across s = {s}"));
            break;
        }
    }
    checks.push(ClassCheck {
        condition: "i",
        passed: bad.is_none(),
        detail: bad.unwrap_or_else(|| "continuous and positive on [-10, 10]".into()),
    });

    let pts: Vec<f64> = grid(-10.0, 10.0, 1.0 / 16.0).collect();
    let mut bad = None;
    for w in pts.windows(2) {
        let (a, b) = (cf.f(w[0]), cf.f(w[1]));
        if !(b < a) {
            bad = Some(format!("f({}) = {b} is not below f({}) = {a}", w[1], w[0]));
            break;
        }
    }
    if bad.is_none() {
        let far: Vec<f64> = (0..4).map(|k| cf.f(-(10f64.powi(k)))).collect();
        if !far.windows(2).all(|w| w[1] > w[0]) {
            bad = Some(format!("f(-10^k) for k=0..3 is not increasing: {far:?}"));
        }
    }
    checks.push(ClassCheck {
        condition: "ii",
        passed: bad.is_none(),
        detail: bad.unwrap_or_else(|| "strictly decreasing, unbounded as s -> -inf".into()),
    });

    let detail;
    let passed = match cf.decay_bound() {
        None => {
            detail = "no decay constants available".to_string();
            false
        }
        Some(DecayBound { c, eps }) if !(eps > 0.0 && c > 0.0) => {
            detail = format!("decay constants C = {c}, eps = {eps} do not satisfy eps > 0, C > 0");
            false
        }
        Some(DecayBound { c, eps }) => {
            let worst = std::iter::once(0.0)
                .chain((-12..=24).map(|k| 10f64.powf(k as f64 / 4.0)))
                .map(|s| cf.f(s) / (c * (1.0 + s).powf(-2.5 - eps)))
                .fold(0.0, f64::max);
            detail = format!("max f(s) / (C (1+s)^(-5/2-eps)) = {worst} with C = {c}, eps = {eps}");
            worst <= 1.0 + 1e-12
        }
    };
    checks.push(ClassCheck {
        condition: "iii",
        passed,
        detail,
    });

    CasimirReport {
        family: cf.name(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

/// Wraps a Casimir function and negates its Legendre transform; used to
/// confirm that the validation suite detects a broken `F*`.
#[derive(Debug, Clone)]
pub struct SignFlippedDual<C>(pub C);

impl<C: Casimir> Casimir for SignFlippedDual<C> {
    fn name(&self) -> String {
        format!("sign_flipped({})", self.0.name())
    }

    fn f(&self, s: f64) -> f64 {
        self.0.f(s)
    }

    fn big_f(&self, s: f64) -> f64 {
        self.0.big_f(s)
    }

    fn f_inverse(&self, lambda: f64) -> Result<f64> {
        self.0.f_inverse(lambda)
    }

    fn f_star(&self, y: f64) -> Result<f64> {
        self.0.f_star(y).map(|v| -v)
    }

    fn decay_bound(&self) -> Option<DecayBound> {
        self.0.decay_bound()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::E;

    use proptest::prelude::*;

    use super::*;
    use crate::numerics::golden_section_max;

    fn boltz(beta: f64) -> CasimirFunction {
        CasimirFunction::boltzmann(beta).unwrap()
    }

    fn power(p: f64, r: f64) -> CasimirFunction {
        CasimirFunction::shifted_power(p, r).unwrap()
    }

    /// Same closed-form `f` without the closed-form `F`, `F*` and inverse.
    #[derive(Debug)]
    struct Generic(CasimirFunction);

    impl Casimir for Generic {
        fn name(&self) -> String {
            "generic".into()
        }
        fn f(&self, s: f64) -> f64 {
            self.0.f(s)
        }
    }

    #[derive(Debug)]
    struct Constant;

    impl Casimir for Constant {
        fn name(&self) -> String {
            "constant".into()
        }
        fn f(&self, _: f64) -> f64 {
            1.0
        }
    }

    fn oracle_f_star(cf: &dyn Casimir, y: f64) -> f64 {
        golden_section_max(|s| y * s - cf.big_f(s), -60.0, 60.0, 1e-11).1
    }

    #[test]
    fn f_examples() {
        assert_eq!(boltz(1.0).f(0.0), 1.0);
        assert!((boltz(2.0).f(1.0) - (-2f64).exp()).abs() < 1e-16);
        assert_eq!(power(3.0, 1.0).f(-1.0), 2.0);
        assert_eq!(power(3.0, 1.0).f(0.0), 1.0);
    }

    #[test]
    fn big_f_examples_and_quadrature_oracle() {
        assert_eq!(boltz(1.0).big_f(0.0), 1.0);
        assert_eq!(boltz(2.0).big_f(0.0), 0.5);
        let p = power(3.0, 1.0);
        assert_eq!(p.big_f(0.0), 0.5);
        for s in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            for cf in [p, power(2.7, 0.5), boltz(1.3)] {
                let q = Generic(cf).big_f(s);
                assert!((q - cf.big_f(s)).abs() < 1e-10, "{cf:?} s={s}: {q} vs {}", cf.big_f(s));
            }
        }
    }

    #[test]
    fn f_star_examples() {
        let b = boltz(1.0);
        assert!((b.f_star(-1.0).unwrap() + 1.0).abs() < 1e-15);
        assert!((oracle_f_star(&b, -1.0) + 1.0).abs() < 1e-9);
        assert!(b.f_star(-E).unwrap().abs() < 1e-15);
        assert!(oracle_f_star(&b, -E).abs() < 1e-9);
        for cf in [b, power(3.0, 1.0)] {
            assert_eq!(cf.f_star(0.0).unwrap(), 0.0);
            assert!(matches!(cf.f_star(0.5), Err(Error::OutOfDomain { .. })));
            assert_eq!(f_star_extended(&cf, 0.5), f64::INFINITY);
        }
    }

    #[test]
    fn f_star_matches_oracle_for_both_families() {
        for cf in [boltz(0.7), boltz(2.0), power(3.0, 1.0), power(4.5, 2.0)] {
            for lambda in [1e-3, 0.1, 0.5, 1.0, 1.7, 6.0] {
                let want = oracle_f_star(&cf, -lambda);
                let got = cf.f_star(-lambda).unwrap();
                assert!((got - want).abs() < 1e-9, "{cf:?} {lambda}: {got} vs {want}");
                let generic = Generic(cf).f_star(-lambda).unwrap();
                assert!((generic - want).abs() < 1e-9, "generic {cf:?} {lambda}");
            }
        }
    }

    #[test]
    fn f_star_prime_examples() {
        let b = boltz(1.0);
        assert_eq!(b.f_star_prime(-1.0).unwrap(), 0.0);
        assert!((b.f_star_prime(-E).unwrap() + 1.0).abs() < 1e-15);
        assert!(b.f_star_prime(0.0).is_err());
        assert!(b.f_star_prime(1.0).is_err());
    }

    #[test]
    fn validation_examples() {
        assert!(validate_casimir(&boltz(1.0)).passed);
        assert!(validate_casimir(&boltz(7.0)).passed);
        assert!(validate_casimir(&power(3.0, 1.0)).passed);
        let c = validate_casimir(&Constant);
        assert!(!c.passed && c.failed("ii"));
        let p2 = validate_casimir(&power(2.0, 1.0));
        assert!(!p2.passed && p2.failed("iii") && !p2.failed("i") && !p2.failed("ii"));
    }

    #[test]
    fn decay_constant_is_tight_for_boltzmann() {
        let b = boltz(1.0);
        let DecayBound { c, eps } = b.decay_bound().unwrap();
        let s = 2.0;
        assert!((b.f(s) / (1.0 + s).powf(-2.5 - eps) - c).abs() < 1e-14);
    }

    #[test]
    fn sign_flip_breaks_fenchel_young() {
        let b = SignFlippedDual(boltz(1.0));
        let lambda = 0.3;
        let s = b.f_inverse(lambda).unwrap();
        let defect = b.big_f(s) + b.f_star(-lambda).unwrap() + lambda * s;
        assert!(defect.abs() > 1e-3);
    }

    proptest! {
        #[test]
        fn fenchel_young(s in -5.0f64..8.0, lambda in 1e-4f64..20.0, beta in 0.2f64..4.0, p in 2.6f64..6.0) {
            for cf in [boltz(beta), power(p, 1.5)] {
                let fy = cf.big_f(s) + cf.f_star(-lambda).unwrap() + lambda * s;
                prop_assert!(fy >= -1e-9);
                let l = cf.f(s);
                let eq = cf.big_f(s) + cf.f_star(-l).unwrap() + l * s;
                prop_assert!(eq.abs() <= 1e-9 * (1.0 + l * s.abs()));
            }
        }

        #[test]
        fn inverse_roundtrip(lambda in 1e-6f64..50.0, beta in 0.2f64..4.0, p in 2.6f64..6.0, r in 0.3f64..3.0) {
            for cf in [boltz(beta), power(p, r)] {
                let s = cf.f_star_prime(-lambda).unwrap();
                prop_assert!((cf.f(s) - lambda).abs() <= 1e-10 * lambda.max(1.0));
            }
            let s = Generic(power(p, r)).f_inverse(lambda).unwrap();
            prop_assert!((power(p, r).f(s) - lambda).abs() <= 1e-10 * lambda.max(1.0));
        }

        #[test]
        fn big_f_convex_decreasing(s in -6.0f64..10.0, beta in 0.2f64..4.0, p in 2.6f64..6.0) {
            let h = 1e-3;
            for cf in [boltz(beta), power(p, 2.0)] {
                let (a, b, c) = (cf.big_f(s - h), cf.big_f(s), cf.big_f(s + h));
                prop_assert!((a - 2.0 * b + c) / (h * h) >= -1e-9 * (1.0 + b));
                prop_assert!(c <= b);
            }
        }

        #[test]
        fn big_f_above_tangent_lines(s in -30.0f64..0.0, beta in 0.3f64..3.0) {
            for slope in [2.0, 4.0] {
                for cf in [boltz(beta), power(3.5, 1.0)] {
                    let st = cf.f_inverse(slope).unwrap();
                    let c = cf.big_f(st) + slope * st;
                    prop_assert!(cf.big_f(s) >= -slope * s + c - 1e-9 * (1.0 + cf.big_f(s)));
                }
            }
        }
    }
}
