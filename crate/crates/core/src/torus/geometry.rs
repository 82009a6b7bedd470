use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anisotropy coefficients of a rectangular flat torus.
///
/// Coordinates live on the unit cube `R^3 / Z^3`; the side lengths
/// `L_j = theta_j^{-1/2}` are carried by the metric, so that the Laplacian is
/// `theta_1 d_1^2 + theta_2 d_2^2 + theta_3 d_3^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct TorusGeometry {
    theta: [f64; 3],
}

impl TorusGeometry {
    pub fn new(theta: [f64; 3]) -> Result<Self> {
        for t in theta {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::invalid(
                    "theta",
                    format!("each coefficient must lie in (0, 1], got {theta:?}"),
                ));
            }
        }
        Ok(Self { theta })
    }

    /// The square torus `theta = (1, 1, 1)`.
    pub fn square() -> Self {
        Self { theta: [1.0; 3] }
    }

    /// `theta = (1, 1/sqrt 2, 1/sqrt 3)`, an irrational torus.
    pub fn irrational() -> Self {
        Self {
            theta: [1.0, 0.5f64.sqrt(), (1.0f64 / 3.0).sqrt()],
        }
    }

    pub fn theta(&self) -> [f64; 3] {
        self.theta
    }

    pub fn side_lengths(&self) -> [f64; 3] {
        self.theta.map(|t| t.powf(-0.5))
    }

    /// `Q(xi) = theta_1 xi_1^2 + theta_2 xi_2^2 + theta_3 xi_3^2`.
    pub fn q_form(&self, xi: [i64; 3]) -> f64 {
        self.theta.iter().zip(xi).map(|(t, x)| t * (x * x) as f64).sum()
    }

    pub fn laplacian_symbol(&self, xi: [i64; 3], convention: Convention) -> f64 {
        convention.scale() * self.q_form(xi)
    }
}

impl TryFrom<[f64; 3]> for TorusGeometry {
    type Error = Error;
    fn try_from(theta: [f64; 3]) -> Result<Self> {
        Self::new(theta)
    }
}

impl From<TorusGeometry> for [f64; 3] {
    fn from(g: TorusGeometry) -> Self {
        g.theta
    }
}

impl Default for TorusGeometry {
    fn default() -> Self {
        Self::square()
    }
}

/// Normalization of the Laplacian symbol in the `e^{2 pi i xi.x}` basis.
///
/// `Standard` is the symbol `4 pi^2 Q(xi)` of the Laplace-Beltrami operator.
/// `Paper` uses `2 pi Q(xi)`, which makes the free propagator multiplier
/// exactly `exp(-2 pi i t Q(xi))`; the two differ by a rescaling of time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Standard,
    Paper,
}

impl Convention {
    pub fn scale(self) -> f64 {
        match self {
            Convention::Standard => 4.0 * PI * PI,
            Convention::Paper => 2.0 * PI,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Convention::Standard => 0,
            Convention::Paper => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Convention::Standard),
            1 => Some(Convention::Paper),
            _ => None,
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Convention::Standard),
            "paper" => Ok(Convention::Paper),
            other => Err(Error::invalid(
                "convention",
                format!("expected `standard` or `paper`, got `{other}`"),
            )),
        }
    }
}

/// Free function form of [`TorusGeometry::q_form`].
pub fn q_form(geometry: &TorusGeometry, xi: [i64; 3]) -> f64 {
    geometry.q_form(xi)
}

/// Free function form of [`TorusGeometry::laplacian_symbol`].
pub fn laplacian_symbol(geometry: &TorusGeometry, xi: [i64; 3], convention: Convention) -> f64 {
    geometry.laplacian_symbol(xi, convention)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_form_examples() {
        let g = TorusGeometry::square();
        assert_eq!(g.q_form([1, 2, 3]), 14.0);
        let g = TorusGeometry::new([1.0, 0.5, 0.25]).unwrap();
        assert_eq!(g.q_form([2, 2, 2]), 7.0);
        assert_eq!(TorusGeometry::irrational().q_form([0, 0, 0]), 0.0);
    }

    #[test]
    fn symbol_conventions() {
        let g = TorusGeometry::square();
        let s = g.laplacian_symbol([1, 0, 0], Convention::Standard);
        assert!((s - 39.47841760435743).abs() < 1e-12);
        let p = g.laplacian_symbol([1, 0, 0], Convention::Paper);
        assert!((p - 2.0 * PI).abs() < 1e-15);
        assert_eq!(g.laplacian_symbol([0, 0, 0], Convention::Paper), 0.0);
        assert_eq!(g.laplacian_symbol([0, 0, 0], Convention::Standard), 0.0);
    }

    #[test]
    fn rejects_theta_outside_unit_interval() {
        assert!(TorusGeometry::new([0.0, 1.0, 1.0]).is_err());
        assert!(TorusGeometry::new([1.0, 1.5, 1.0]).is_err());
        assert!(TorusGeometry::new([1.0, f64::NAN, 1.0]).is_err());
        assert!(TorusGeometry::new([1.0, 1.0, 1e-3]).is_ok());
    }

    #[test]
    fn side_lengths_follow_theta() {
        let g = TorusGeometry::new([1.0, 0.25, 0.04]).unwrap();
        let l = g.side_lengths();
        assert!((l[1] - 2.0).abs() < 1e-15 && (l[2] - 5.0).abs() < 1e-12);
    }
}
