use crate::casimir::Casimir;
use crate::error::{Error, Result};
use crate::functionals::TailModel;
use crate::numerics::root_decreasing;

/// `sum_k f(mu_k + sigma)` plus the tail model's share.
pub fn occupation_sum(mu: &[f64], tail: &TailModel, cf: &dyn Casimir, sigma: f64) -> f64 {
    mu.iter().map(|m| cf.f(m + sigma)).sum::<f64>() + tail.f_tail(cf, sigma)
}

/// The chemical shift with `sum_k f(mu_k + sigma) + tail(sigma) = Lambda`,
/// by bisection on the decreasing left-hand side.
pub fn solve_sigma(mu: &[f64], tail: &TailModel, cf: &dyn Casimir, lambda_total: f64) -> Result<f64> {
    if !(lambda_total > 0.0 && lambda_total.is_finite()) {
        return Err(Error::invalid(
            "lambda",
            format!("{lambda_total} is not a positive number"),
        ));
    }
    if mu.is_empty() && tail.c.is_infinite() {
        return Err(Error::invalid("mu", "no eigenvalues and no tail"));
    }
    root_decreasing(|s| occupation_sum(mu, tail, cf, s) - lambda_total, "chemical shift")
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::casimir::CasimirFunction;
    use crate::functionals::free_spectrum;
    use crate::torus::{Convention, TorusGeometry};

    fn free_mu(count: usize) -> Vec<f64> {
        free_spectrum(&TorusGeometry::irrational(), Convention::Standard, count)
    }

    #[test]
    fn boltzmann_closed_form() {
        let cf = CasimirFunction::boltzmann(1.0).unwrap();
        let mu = free_mu(343);
        let none = TailModel::none(mu.len());
        let z: f64 = mu.iter().map(|m| (-m).exp()).sum();
        for lam in [1e-3, 1.0, 10.0] {
            let s = solve_sigma(&mu, &none, &cf, lam).unwrap();
            assert!((s - (z / lam).ln()).abs() < 1e-10, "{lam}: {s}");
            assert!((occupation_sum(&mu, &none, &cf, s) - lam).abs() < 1e-12 * lam.max(1.0));
        }
        let s1 = solve_sigma(&mu, &none, &cf, 1.0).unwrap();
        let s2 = solve_sigma(&mu, &none, &cf, 0.5).unwrap();
        assert!((s2 - s1 - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn tail_lowers_sigma_uptake() {
        let cf = CasimirFunction::shifted_power(3.0, 1.0).unwrap();
        let mu = free_mu(125);
        let tail = TailModel::calibrate(&TorusGeometry::irrational(), Convention::Standard, 125);
        let with = solve_sigma(&mu, &tail, &cf, 1.0).unwrap();
        let without = solve_sigma(&mu, &TailModel::none(125), &cf, 1.0).unwrap();
        assert!(with > without);
        assert!((occupation_sum(&mu, &tail, &cf, with) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_lambda() {
        let cf = CasimirFunction::boltzmann(1.0).unwrap();
        let mu = free_mu(8);
        for lam in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(solve_sigma(&mu, &TailModel::none(8), &cf, lam).is_err());
        }
    }

    proptest! {
        #[test]
        fn sigma_decreases_in_lambda(a in 1e-3f64..10.0, b in 1e-3f64..10.0, beta in 0.5f64..4.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let cf = CasimirFunction::boltzmann(beta).unwrap();
            let mu = free_mu(27);
            let none = TailModel::none(27);
            let (sa, sb) = (solve_sigma(&mu, &none, &cf, a).unwrap(), solve_sigma(&mu, &none, &cf, b).unwrap());
            prop_assert_eq!(sa > sb, a < b);
        }
    }
}
