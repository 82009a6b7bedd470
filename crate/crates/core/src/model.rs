//! Nonlinearity parameters shared across modules.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power `alpha` of the density in the nonlinearity `sigma rho^alpha u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Alpha {
    Cubic,
    Quintic,
}

impl Alpha {
    pub fn new(alpha: u8) -> Result<Self> {
        match alpha {
            1 => Ok(Alpha::Cubic),
            2 => Ok(Alpha::Quintic),
            _ => Err(Error::invalid("alpha", format!("{alpha} is not 1 or 2"))),
        }
    }

    pub fn value(self) -> u8 {
        match self {
            Alpha::Cubic => 1,
            Alpha::Quintic => 2,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.value() as f64
    }

    /// Grid padding that makes the degree `2 alpha + 1` products alias-free.
    pub fn default_padding(self) -> usize {
        self.value() as usize + 1
    }

    /// `rho^alpha`, with `rho` clamped at zero.
    pub fn pow(self, rho: f64) -> f64 {
        let r = rho.max(0.0);
        match self {
            Alpha::Cubic => r,
            Alpha::Quintic => r * r,
        }
    }
}

impl TryFrom<u8> for Alpha {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for u8 {
    fn from(a: Alpha) -> u8 {
        a.value()
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Sign of the coupling: `+1` defocusing, `-1` focusing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Coupling {
    #[default]
    Defocusing,
    Focusing,
}

impl Coupling {
    pub fn new(sign: i8) -> Result<Self> {
        match sign {
            1 => Ok(Coupling::Defocusing),
            -1 => Ok(Coupling::Focusing),
            _ => Err(Error::invalid("sign", format!("{sign} is not +1 or -1"))),
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Coupling::Defocusing => 1.0,
            Coupling::Focusing => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Coupling::Defocusing => Coupling::Focusing,
            Coupling::Focusing => Coupling::Defocusing,
        }
    }
}

impl TryFrom<i8> for Coupling {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        Coupling::new(v)
    }
}

impl From<Coupling> for i8 {
    fn from(c: Coupling) -> i8 {
        c.sign() as i8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_roundtrip_and_range() {
        assert_eq!(Alpha::new(1).unwrap(), Alpha::Cubic);
        assert_eq!(Alpha::Quintic.default_padding(), 3);
        assert!(Alpha::new(3).is_err());
        assert_eq!(Alpha::Quintic.pow(3.0), 9.0);
        assert_eq!(Alpha::Cubic.pow(-1e-18), 0.0);
    }

    #[test]
    fn coupling_signs() {
        assert_eq!(Coupling::new(-1).unwrap().sign(), -1.0);
        assert!(Coupling::new(0).is_err());
        assert_eq!(Coupling::Focusing.flipped(), Coupling::Defocusing);
    }
}
