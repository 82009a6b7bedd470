//! Pseudospectral solvers for nonlinear Schrodinger systems on flat 3-tori.

pub mod casimir;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod functionals;
pub mod harness;
pub mod io;
mod linalg;
pub mod model;
pub mod numerics;
pub mod stationary;
pub mod torus;

pub use casimir::{Casimir, CasimirFunction};
pub use error::{Error, Result};
pub use model::{Alpha, Coupling};
